#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capex/assign.hpp"
#include "capex/baselines.hpp"
#include "capex/costs.hpp"
#include "capex/instances.hpp"

using namespace capex;

namespace {

// Four-node paradox network: two symmetric congestible approaches joined by a
// cheap shortcut whose expansion worsens the equilibrium.
struct BraessToy {
  Network net;
  DemandTable demand;
  int shortcut = 4;
};

BraessToy make_braess() {
  std::vector<Link> ls(5);
  auto set = [&](int i, int a, int b, double t0, double c) {
    ls[i].tail = a;
    ls[i].head = b;
    ls[i].t0 = t0;
    ls[i].cap = c;
    ls[i].umax = 10.0 * c;
    ls[i].bcoef = 1.0;
  };
  set(0, 0, 1, 1.0, 2.0);   // 1->2, congestible
  set(1, 2, 3, 1.0, 2.0);   // 3->4, congestible
  set(2, 0, 2, 8.0, 50.0);  // 1->3, flat
  set(3, 1, 3, 8.0, 50.0);  // 2->4, flat
  set(4, 1, 2, 1.0, 2.0);   // 2->3, the shortcut
  BraessToy toy{Network(4, std::move(ls)), {}, 4};
  toy.demand.entries = {{0, 3, 6.0}};
  return toy;
}

// Brute-force equilibrium of the three-route toy by grid search plus
// refinement over the route-flow simplex.
double braess_ue_time(const BraessToy& toy, double y_shortcut) {
  std::vector<double> y(5, 0.0);
  y[4] = y_shortcut;
  // routes: A = 1-2-4 (links 0,3), B = 1-3-4 (links 2,1), C = 1-2-3-4 (links 0,4,1)
  auto link_flows = [&](double ha, double hb) {
    double hc = 6.0 - ha - hb;
    return std::vector<double>{ha + hc, hb + hc, hb, ha, hc};
  };
  double best = 1e300, ba = 0, bb = 0;
  double step = 6.0 / 600.0;
  for (double ha = 0.0; ha <= 6.0 + 1e-12; ha += step)
    for (double hb = 0.0; ha + hb <= 6.0 + 1e-12; hb += step) {
      double pot = beckmann_potential(toy.net, y, link_flows(ha, hb));
      if (pot < best) {
        best = pot;
        ba = ha;
        bb = hb;
      }
    }
  for (double r = step; r > 1e-9; r *= 0.5)
    for (double ha : {ba - r, ba, ba + r})
      for (double hb : {bb - r, bb, bb + r}) {
        if (ha < 0 || hb < 0 || ha + hb > 6.0) continue;
        double pot = beckmann_potential(toy.net, y, link_flows(ha, hb));
        if (pot < best) {
          best = pot;
          ba = ha;
          bb = hb;
        }
      }
  std::vector<double> v = link_flows(ba, bb);
  double tt = 0.0;
  for (int a = 0; a < 5; ++a) tt += bpr_time(toy.net.link(a), y[a], v[a]) * v[a];
  return tt;
}

}  // namespace

TEST_CASE("reference points on hearn") {
  Instance h = builtin_instance("hearn");
  ReferencePoints refs = compute_references(h.net, h.demand, 1.0, 1e-8);
  CHECK(refs.converged);
  CHECK(refs.f0 == doctest::Approx(245.6).epsilon(0.5 / 245.6));
  CHECK(refs.fso < refs.f0);
  // joint system optimum beats the no-expansion system optimum
  std::vector<double> zero(h.net.num_links(), 0.0);
  AssignResult so0 = solve_so_assignment(h.net, h.demand, zero, 1e-8);
  double f_so_noexp = designer_objective(h.net, zero, so0.flow.v, 1.0);
  CHECK(refs.fso < f_so_noexp);

  // a very expensive expansion forces the plan to zero
  ReferencePoints pricey = compute_references(h.net, h.demand, 1e9, 1e-8);
  CHECK(pricey.fso == doctest::Approx(f_so_noexp).epsilon(1e-4));
  for (double y : pricey.y_so) CHECK(y <= 1e-4);
}

TEST_CASE("relative scale") {
  ReferencePoints refs;
  refs.f0 = 245.6;
  refs.fso = 183.6;
  CHECK(relative_scale(210.1, refs) == doctest::Approx(0.427).epsilon(1e-2));
  CHECK(relative_scale(refs.fso, refs) == 0.0);
  CHECK(relative_scale(refs.f0, refs) == 1.0);

  // affine invariance under a common positive rescaling
  ReferencePoints scaled;
  scaled.f0 = 3.7 * refs.f0;
  scaled.fso = 3.7 * refs.fso;
  CHECK(relative_scale(3.7 * 210.1, scaled) == doctest::Approx(relative_scale(210.1, refs)));

  ReferencePoints degenerate;
  degenerate.f0 = 1.0;
  degenerate.fso = 2.0;
  CHECK_THROWS_AS(relative_scale(1.5, degenerate), ValidationError);
}

TEST_CASE("sensitivity scores rank the hearn links") {
  Instance h = builtin_instance("hearn");
  std::vector<double> scores = sensitivity_scores(h.net, h.demand, 1.0, 1e-4, 1e-9);
  REQUIRE(scores.size() == 18);
  // links 6 and 9 carry the two largest scores
  std::vector<int> order(18);
  for (int a = 0; a < 18; ++a) order[a] = a;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> top = {order[0], order[1]};
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<int>{5, 8});

  // a link that cannot be expanded is never selected
  Instance h2 = builtin_instance("hearn");
  h2.net.link(5).umax = 0.0;
  std::vector<double> s2 = sensitivity_scores(h2.net, h2.demand, 1.0, 1e-4, 1e-9);
  CHECK(s2[5] == -std::numeric_limits<double>::infinity());

  // first-order consistency: halving the step moves each score only slightly
  std::vector<double> half = sensitivity_scores(h.net, h.demand, 1.0, 5e-5, 1e-9);
  for (int a = 0; a < 18; ++a)
    CHECK(std::abs(half[a] - scores[a]) <= 1.0 + 0.02 * std::abs(scores[a]));
}

TEST_CASE("braess paradox yields a negative score") {
  BraessToy toy = make_braess();
  // oracle: brute-force equilibria confirm the paradox on this instance
  double before = braess_ue_time(toy, 0.0);
  double after = braess_ue_time(toy, 0.5 * toy.net.link(toy.shortcut).cap * 1e-1);
  REQUIRE(after > before);

  std::vector<double> scores = sensitivity_scores(toy.net, toy.demand, 1.0, 1e-2, 1e-10);
  CHECK(scores[toy.shortcut] < 0.0);
}

TEST_CASE("restricted solves reach the published hearn plans") {
  Instance h = builtin_instance("hearn");
  ReferencePoints refs = compute_references(h.net, h.demand, 1.0, 1e-8);

  RestrictedResult m1_support = solve_restricted_bcep(h.net, h.demand, 1.0, {5, 8}, 1e-6, 400);
  CHECK(relative_scale(m1_support.objective, refs) == doctest::Approx(0.510).epsilon(0.02));
  CHECK(m1_support.y[5] == doctest::Approx(2.454).epsilon(0.05));
  CHECK(m1_support.y[8] == doctest::Approx(0.315).epsilon(0.25));

  RestrictedResult global_support = solve_restricted_bcep(h.net, h.demand, 1.0, {5, 10}, 1e-6, 400);
  CHECK(global_support.objective == doctest::Approx(210.1).epsilon(0.5 / 210.1));
  CHECK(relative_scale(global_support.objective, refs) == doctest::Approx(0.427).epsilon(0.015));

  // expanding an unhelpful link leaves the objective at the no-build value
  std::vector<double> scores = sensitivity_scores(h.net, h.demand, 1.0, 1e-4, 1e-9);
  int worst = 0;
  for (int a = 0; a < 18; ++a)
    if (scores[a] < scores[worst]) worst = a;
  RestrictedResult idle = solve_restricted_bcep(h.net, h.demand, 1.0, {worst}, 1e-6, 200);
  CHECK(idle.objective <= refs.f0 + 1e-6);
  CHECK(idle.objective >= refs.f0 - 0.12 * (refs.f0 - refs.fso));

  CHECK_THROWS_AS(solve_restricted_bcep(h.net, h.demand, 1.0, {}, 1e-6, 10), ValidationError);
  CHECK_THROWS_AS(solve_restricted_bcep(h.net, h.demand, 1.0, {99}, 1e-6, 10), ValidationError);
}

TEST_CASE("prescreening baseline on hearn") {
  Instance h = builtin_instance("hearn");
  ReferencePoints refs = compute_references(h.net, h.demand, 1.0, 1e-8);
  M1Result res = run_m1(h.net, h.demand, 1.0, 2, 1e-6);
  CHECK(res.support == std::vector<int>{5, 8});
  CHECK(relative_scale(res.objective, refs) == doctest::Approx(0.510).epsilon(0.02));

  // tau covering every expandable link
  M1Result all = run_m1(h.net, h.demand, 1.0, 18, 1e-6);
  CHECK(all.support.size() == 18);
}

TEST_CASE("l1 search baseline on hearn") {
  Instance h = builtin_instance("hearn");
  ReferencePoints refs = compute_references(h.net, h.demand, 1.0, 1e-8);
  M2Result res = run_m2(h.net, h.demand, 1.0, 2, 0.1, 2.0, 0.95, 1e-6);
  REQUIRE(res.ok);
  CHECK(res.accepted_alpha >= 10.9);
  CHECK(res.accepted_alpha <= 12.9);
  CHECK(res.support == std::vector<int>{5, 10});
  CHECK(relative_scale(res.objective, refs) == doctest::Approx(0.427).epsilon(0.015));

  // the accepted alpha always satisfied the budget before debiasing
  for (const AlphaStep& s : res.log)
    if (s.alpha == res.accepted_alpha) CHECK(s.accepted);

  // coarse phase grows alpha strictly; refinement shrinks it
  bool refining = false;
  for (size_t i = 1; i < res.log.size(); ++i) {
    if (res.log[i].alpha < res.log[i - 1].alpha) refining = true;
    if (!refining) CHECK(res.log[i].alpha > res.log[i - 1].alpha);
  }

  // an enormous starting alpha satisfies the budget from the first coarse
  // step; the refinement then walks down until the budget binds again
  M2Result flat = run_m2(h.net, h.demand, 1.0, 2, 1e6, 2.0, 0.95, 1e-6);
  REQUIRE(flat.ok);
  CHECK(flat.log.front().support_size == 0);
  CHECK(flat.log.front().accepted);
  CHECK(flat.support.size() <= 2);
  CHECK(flat.objective <= refs.f0 + 1e-9);
}

TEST_CASE("brute force on small budgets") {
  Instance h = builtin_instance("hearn");
  ReferencePoints refs = compute_references(h.net, h.demand, 1.0, 1e-8);

  OracleResult none = brute_force_ccbcep(h.net, h.demand, 1.0, 0, 5, 1e-6);
  CHECK(none.objective == doctest::Approx(refs.f0).epsilon(1e-6));
  CHECK(none.support.empty());

  // the enumerated optimum dominates both heuristics at the same budget
  OracleResult best = brute_force_ccbcep(h.net, h.demand, 1.0, 2, 9, 1e-6);
  M1Result m1 = run_m1(h.net, h.demand, 1.0, 2, 1e-6);
  M2Result m2 = run_m2(h.net, h.demand, 1.0, 2, 0.1, 2.0, 0.95, 1e-6);
  CHECK(best.objective <= m1.objective + 1e-6 * refs.f0);
  CHECK(best.objective <= m2.objective + 1e-6 * refs.f0);

  CHECK_THROWS_AS(brute_force_ccbcep(h.net, h.demand, 1.0, 3, 5, 1e-6), ValidationError);

  // two-link toy: tau = 1 agrees with scanning both single-link problems
  std::vector<Link> ls(2);
  for (int a = 0; a < 2; ++a) {
    ls[a].tail = 0;
    ls[a].head = 1;
    ls[a].t0 = a == 0 ? 1.0 : 2.0;
    ls[a].cap = 1.0 + a;
    ls[a].umax = 10.0 * ls[a].cap;
    ls[a].bcoef = 1.0;
  }
  Network net(2, std::move(ls));
  DemandTable d;
  d.entries = {{0, 1, 3.0}};
  OracleResult toy = brute_force_ccbcep(net, d, 1.0, 1, 25, 1e-7);

  double best_scan = 1e300;
  FlowState warm;
  for (int a = 0; a < 2; ++a) {
    for (int i = 0; i <= 400; ++i) {
      std::vector<double> y(2, 0.0);
      y[a] = net.link(a).umax * i / 400.0;
      AssignResult ue = solve_ue(net, d, y, 1e-9, warm.empty() ? nullptr : &warm);
      warm = ue.flow;
      best_scan = std::min(best_scan, designer_objective(net, y, ue.flow.v, 1.0));
    }
  }
  CHECK(toy.objective <= best_scan + 1e-4 * std::abs(best_scan));
}
