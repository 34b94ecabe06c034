#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capex/cardstep.hpp"
#include "capex/costs.hpp"
#include "capex/instances.hpp"
#include "capex/pdc.hpp"

using namespace capex;

namespace {

Network parallel_links(const std::vector<double>& t0, const std::vector<double>& cap) {
  std::vector<Link> links(t0.size());
  for (size_t a = 0; a < t0.size(); ++a) {
    links[a].tail = 0;
    links[a].head = 1;
    links[a].t0 = t0[a];
    links[a].cap = cap[a];
    links[a].umax = 10.0 * cap[a];
    links[a].bcoef = 1.0;
  }
  return Network(2, std::move(links));
}

double golden_min(const std::function<double(double)>& f, double lo, double hi) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("kkt tolerance calibration") {
  auto [eps2, eps3] = theorem2_tolerances(1e-3, 20.0);
  CHECK(eps2 == doctest::Approx(1e-3 / (40.0 * std::sqrt(2.0))).epsilon(1e-12));
  CHECK(eps2 == doctest::Approx(1.7678e-5).epsilon(1e-4));
  CHECK(eps3 == 1e-3);
  CHECK_THROWS_AS(theorem2_tolerances(0.0, 20.0), ValidationError);
  auto [e2b, e3b] = theorem2_tolerances(1.0, 1.0 / (2.0 * std::sqrt(2.0)));
  CHECK(e2b == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e3b == 1.0);
}

TEST_CASE("config validation") {
  PdcConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  PdcConfig bad = cfg;
  bad.sigma = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.theta_l = 5.0;
  bad.theta_u = 2.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.tau = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("zero budget pins the plan at the status quo") {
  Instance h = builtin_instance("hearn");
  PdcConfig cfg;
  cfg.tau = 0;
  cfg.eta = 1.0;
  cfg.rho0 = 1.0;
  cfg.sigma = 1.25;
  cfg.theta_l = 10.0;
  cfg.theta_u = 20.0;
  std::vector<double> y0(h.net.num_links(), 0.0);
  PdcResult res = pdc_solve(h.net, h.demand, cfg, y0);
  CHECK(res.certificate.converged);
  for (double y : res.y) CHECK(y == 0.0);
  CHECK(res.certificate.e3 <= cfg.eps3);
  CHECK(res.certificate.phi_final <= cfg.eps3);

  // the flows settle at the no-build equilibrium
  AssignResult ue = solve_ue(h.net, h.demand, y0, 1e-9);
  double f_pdc = designer_objective(h.net, res.y, res.v_star, 1.0);
  double f_ue = designer_objective(h.net, y0, ue.flow.v, 1.0);
  CHECK(f_pdc == doctest::Approx(f_ue).epsilon(1e-6));
}

TEST_CASE("starting plans outside the cardinality set are rejected") {
  Instance h = builtin_instance("hearn");
  PdcConfig cfg;
  cfg.tau = 1;
  std::vector<double> y0(h.net.num_links(), 0.0);
  y0[0] = 0.5;
  y0[1] = 0.5;
  CHECK_THROWS_AS(pdc_solve(h.net, h.demand, cfg, y0), ValidationError);
}

TEST_CASE("alternation returns a fixed point after one confirming sweep") {
  Instance h = builtin_instance("hearn");
  int n = h.net.num_links();
  std::vector<double> zero(n, 0.0);
  FlowState warm;
  ValueFunction vf = linearize_value_function(h.net, h.demand, zero, 1e-8, nullptr, &warm);

  PdcConfig cfg;
  cfg.tau = 2;
  cfg.eta = 1.0;
  InnerObjectiveParams params;
  params.rho = 2.0;
  params.beta = 7.5;
  params.eta = 1.0;
  params.y_anchor = zero;
  params.v_anchor = vf.ue_flow;
  params.grad_g_anchor = vf.grad;
  params.g_anchor = vf.g;

  AmaResult first = ama_solve(h.net, h.demand, cfg, params, zero, &warm);
  CHECK(first.fixed_point);

  // re-run from the returned plan and flows: one confirming sweep
  AmaResult again = ama_solve(h.net, h.demand, cfg, params, first.y, &first.flow);
  CHECK(again.fixed_point);
  CHECK(again.sweeps == 1);
  for (int a = 0; a < n; ++a) CHECK(again.y[a] == doctest::Approx(first.y[a]).epsilon(1e-6));
}

TEST_CASE("alternation objective is strictly decreasing until the fixed point") {
  Instance h = builtin_instance("hearn");
  int n = h.net.num_links();
  std::vector<double> zero(n, 0.0);
  FlowState warm;
  ValueFunction vf = linearize_value_function(h.net, h.demand, zero, 1e-8, nullptr, &warm);

  PdcConfig cfg;
  cfg.tau = 2;
  cfg.eta = 1.0;
  InnerObjectiveParams params;
  params.rho = 1.0;
  params.beta = 15.0;
  params.eta = 1.0;
  params.y_anchor = zero;
  params.v_anchor = vf.ue_flow;
  params.grad_g_anchor = vf.grad;
  params.g_anchor = vf.g;

  AmaResult res = ama_solve(h.net, h.demand, cfg, params, zero, &warm);
  REQUIRE(res.psi_values.size() >= 2);
  for (size_t j = 1; j < res.psi_values.size(); ++j) {
    CHECK(res.psi_values[j] <=
          res.psi_values[j - 1] + 1e-12 * std::abs(res.psi_values[j - 1]));
  }
  // strict decrease away from the fixed point
  CHECK(res.psi_values[1] < res.psi_values[0]);
}

TEST_CASE("two-link alternation matches a hand-iterated oracle") {
  Network net = parallel_links({1.0, 2.0}, {1.0, 2.0});
  DemandTable d;
  d.entries = {{0, 1, 3.0}};
  std::vector<double> zero = {0.0, 0.0};
  FlowState warm;
  ValueFunction vf = linearize_value_function(net, d, zero, 1e-10, nullptr, &warm);

  PdcConfig cfg;
  cfg.tau = 1;
  cfg.eta = 1.0;
  cfg.assign_tol = 1e-10;
  cfg.inner_tol = 1e-9;
  InnerObjectiveParams params;
  params.rho = 1.5;
  params.beta = 2.0;
  params.eta = 1.0;
  params.y_anchor = zero;
  params.v_anchor = vf.ue_flow;
  params.grad_g_anchor = vf.grad;
  params.g_anchor = vf.g;

  AmaResult got = ama_solve(net, d, cfg, params, zero, &warm);
  REQUIRE(got.fixed_point);

  // hand-iterated alternation with value-only scalar solves
  std::vector<double> y = {0.0, 0.0};
  std::vector<double> v = params.v_anchor;
  for (int it = 0; it < 500; ++it) {
    // flow block: golden section on the split
    InnerCostModel model(net, params, y);
    double x = golden_min(
        [&](double s) { return model.potential(0, s) + model.potential(1, 3.0 - s); }, 0.0, 3.0);
    std::vector<double> v_new = {x, 3.0 - x};
    // expansion block: per-link golden section, keep the best single link
    double best_gain = 0.0;
    std::vector<double> y_new = {0.0, 0.0};
    for (int a = 0; a < 2; ++a) {
      const Link& l = net.link(a);
      double ya = golden_min([&](double t) { return psi_link(l, params, t, v_new[a]); }, 0.0,
                             l.umax);
      double gain = psi_link(l, params, ya, v_new[a]) - psi_link(l, params, 0.0, v_new[a]);
      if (gain < best_gain) {
        best_gain = gain;
        y_new = {0.0, 0.0};
        y_new[a] = ya;
      }
    }
    double dy = std::max(std::abs(y_new[0] - y[0]), std::abs(y_new[1] - y[1]));
    double dv = std::max(std::abs(v_new[0] - v[0]), std::abs(v_new[1] - v[1]));
    y = y_new;
    v = v_new;
    if (dy < 1e-10 && dv < 1e-10) break;
  }
  CHECK(got.y[0] == doctest::Approx(y[0]).epsilon(1e-6));
  CHECK(got.y[1] == doctest::Approx(y[1]).epsilon(1e-6));
  CHECK(got.v[0] == doctest::Approx(v[0]).epsilon(1e-6));
}

TEST_CASE("merit function identities") {
  Instance h = builtin_instance("hearn");
  int n = h.net.num_links();
  std::vector<double> zero(n, 0.0);
  AssignResult ue = solve_ue(h.net, h.demand, zero, 1e-10);

  // at equilibrium flows the merit equals the designer objective
  double m = merit(h.net, h.demand, 1.0, zero, ue.flow.v, 3.0, 1e-10);
  double f = designer_objective(h.net, zero, ue.flow.v, 1.0);
  CHECK(m == doctest::Approx(f).epsilon(1e-7));

  // rho = 0 drops the gap term entirely
  std::vector<double> off(n, 0.1);
  std::vector<double> v = ue.flow.v;
  for (double& x : v) x *= 1.0;
  CHECK(merit(h.net, h.demand, 1.0, off, v, 0.0, 1e-10) ==
        doctest::Approx(designer_objective(h.net, off, v, 1.0)));
}

TEST_CASE("penalty loop invariants on a short hearn run") {
  Instance h = builtin_instance("hearn");
  PdcConfig cfg;
  cfg.tau = 2;
  cfg.eta = 1.0;
  cfg.rho0 = 1.0;
  cfg.sigma = 1.25;
  cfg.theta_l = 10.0;
  cfg.theta_u = 20.0;
  cfg.eps1 = cfg.eps2 = cfg.eps3 = 1e-3;
  std::vector<double> y0(h.net.num_links(), 0.0);
  PdcResult res = pdc_solve(h.net, h.demand, cfg, y0);
  REQUIRE(res.certificate.converged);
  CHECK(res.certificate.e1 <= cfg.eps1);
  CHECK(res.certificate.e2 <= cfg.eps2);
  CHECK(res.certificate.e3 <= cfg.eps3);

  std::vector<double> umax = h.net.umax_vector();
  double prev_rho = 0.0;
  for (size_t i = 0; i < res.trace.rows.size(); ++i) {
    const PdcIterate& r = res.trace.rows[i];
    // schedule: rho nondecreasing, rho*beta within the prescribed interval
    CHECK(r.rho >= prev_rho);
    prev_rho = r.rho;
    CHECK(r.rho * r.beta >= cfg.theta_l - 1e-9);
    CHECK(r.rho * r.beta <= cfg.theta_u + 1e-9);
    // every iterate is feasible for the cardinality set
    CHECK(is_member(r.y, umax, cfg.tau, 0.0));
    // the recorded metrics are recomputable from the stored anchors
    const std::vector<double>& y_next =
        i + 1 < res.trace.rows.size() ? res.trace.rows[i + 1].y : res.trace.y_final;
    const std::vector<double>& v_next =
        i + 1 < res.trace.rows.size() ? res.trace.rows[i + 1].v : res.trace.v_final;
    double e1 = 0.0, e2 = 0.0, lin = r.g_anchor;
    for (int a = 0; a < h.net.num_links(); ++a) {
      e1 += (y_next[a] - r.y[a]) * (y_next[a] - r.y[a]);
      e2 += (v_next[a] - r.v[a]) * (v_next[a] - r.v[a]);
      lin += r.grad_g_anchor[a] * (y_next[a] - r.y[a]);
    }
    double e3 = beckmann_potential(h.net, y_next, v_next) - lin;
    CHECK(r.e1 == doctest::Approx(std::sqrt(e1)).epsilon(1e-9));
    CHECK(r.e2 == doctest::Approx(std::sqrt(e2)).epsilon(1e-9));
    CHECK(r.e3 == doctest::Approx(e3).epsilon(1e-9));
    // sufficient decrease of the merit at the iteration's penalty level
    double decrease = r.rho * r.beta * (e1 + e2);
    CHECK(r.merit <= r.merit_prev - decrease + 10.0 * cfg.assign_tol * std::abs(r.merit_prev));
  }

  // the certificate's feasibility is confirmed by an equilibrium solve
  GapValue gap = gap_function(h.net, h.demand, res.y, res.trace.v_final, 1e-9);
  CHECK(gap.gap <= cfg.eps3 * (1.0 + 1e-3));
  CHECK(res.certificate.phi_final == doctest::Approx(gap.gap).epsilon(1e-4));
}
