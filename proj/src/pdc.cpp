#include "capex/pdc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "capex/cardstep.hpp"

namespace capex {

namespace {

double l2_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double inf_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double beta_for(const PdcConfig& c, double rho) {
  if (c.beta_rule == BetaRule::sum) return (c.theta_l + c.theta_u) / rho;
  return (c.theta_l + c.theta_u) / (2.0 * rho);
}

}  // namespace

void PdcConfig::validate() const {
  if (tau < 0) throw ValidationError("tau must be nonnegative");
  if (!(eta > 0.0)) throw ValidationError("eta must be positive");
  if (!(eps1 > 0.0 && eps2 > 0.0 && eps3 > 0.0))
    throw ValidationError("outer tolerances must be positive");
  if (!(rho0 > 0.0)) throw ValidationError("rho0 must be positive");
  if (!(sigma > 1.0)) throw ValidationError("sigma must exceed 1");
  if (!(theta_l > 0.0 && theta_u > theta_l))
    throw ValidationError("need 0 < theta_l < theta_u");
  if (!(inner_tol > 0.0 && assign_tol > 0.0))
    throw ValidationError("inner tolerances must be positive");
  if (max_outer < 1 || max_inner < 1) throw ValidationError("iteration caps must be positive");
}

AmaResult ama_solve(const Network& net, const DemandTable& demand, const PdcConfig& config,
                    const InnerObjectiveParams& params, std::span<const double> y_init,
                    const FlowState* warm) {
  std::vector<double> umax = net.umax_vector();
  AmaResult out;
  out.y.assign(y_init.begin(), y_init.end());
  out.v = warm && !warm->empty() ? warm->v : params.v_anchor;
  out.psi_values.push_back(psi_total(net, params, out.y, out.v));

  const FlowState* seed = warm;
  for (int j = 0; j < config.max_inner; ++j) {
    AssignResult res = solve_inner_v(net, demand, params, out.y, config.assign_tol, seed);
    out.flow = std::move(res.flow);
    seed = &out.flow;

    std::vector<ScalarPiece> pieces;
    pieces.reserve(net.num_links());
    for (int a = 0; a < net.num_links(); ++a) {
      const Link& link = net.link(a);
      double v_a = out.flow.v[a];
      pieces.push_back(ScalarPiece{
          [&link, &params, v_a](double y) { return psi_link(link, params, y, v_a); },
          [&link, &params, v_a](double y) { return psi_link_dy(link, params, y, v_a); }});
    }
    std::vector<double> y_next = solve_cardinality_step(pieces, umax, config.tau, 1e-10);

    double dy = inf_diff(y_next, out.y);
    double dv = inf_diff(out.flow.v, out.v);
    bool fixed = dy <= config.inner_tol * (1.0 + inf_norm(out.y)) &&
                 dv <= config.inner_tol * (1.0 + inf_norm(out.v));

    out.y = std::move(y_next);
    out.v = out.flow.v;
    out.psi_values.push_back(psi_total(net, params, out.y, out.v));
    out.sweeps = j + 1;
    if (fixed) {
      out.fixed_point = true;
      break;
    }
  }
  return out;
}

PdcResult pdc_solve(const Network& net, const DemandTable& demand, const PdcConfig& config,
                    std::span<const double> y0) {
  config.validate();
  std::vector<double> umax = net.umax_vector();
  if (!is_member(y0, umax, config.tau, 0.0))
    throw ValidationError("initial plan violates the cardinality set");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double tight_tol = config.assign_tol / 100.0;

  FlowState ue_warm;
  ValueFunction vf = linearize_value_function(net, demand, y0, tight_tol, nullptr, &ue_warm);

  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> v = vf.ue_flow;
  double phi_k = beckmann_potential(net, y, v) - vf.g;
  double rho = config.rho0;
  double beta = beta_for(config, rho);

  PdcResult out;
  FlowState inner_warm = ue_warm;
  bool converged = false;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;

  for (int k = 0; k < config.max_outer; ++k) {
    InnerObjectiveParams params;
    params.rho = rho;
    params.beta = beta;
    params.eta = config.eta;
    params.y_anchor = y;
    params.v_anchor = v;
    params.grad_g_anchor = vf.grad;
    params.g_anchor = vf.g;

    AmaResult ama = ama_solve(net, demand, config, params, y, &inner_warm);
    inner_warm = ama.flow;

    e1 = l2_diff(ama.y, y);
    e2 = l2_diff(ama.v, v);
    e3 = majorant_phi(net, params, ama.y, ama.v);

    double objective = designer_objective(net, ama.y, ama.v, config.eta);
    double merit_prev = designer_objective(net, y, v, config.eta) + rho * phi_k;

    // Tight equilibrium at the new plan: the next linearization anchor, and at
    // the same time the merit / phi values of the new iterate.
    ValueFunction vf_next =
        linearize_value_function(net, demand, ama.y, tight_tol, &ue_warm, &ue_warm);
    double phi_next = beckmann_potential(net, ama.y, ama.v) - vf_next.g;
    double merit_next = objective + rho * phi_next;
    double objective_star = designer_objective(net, ama.y, vf_next.ue_flow, config.eta);

    PdcIterate row;
    row.k = k;
    row.rho = rho;
    row.beta = beta;
    row.y = y;
    row.v = v;
    row.g_anchor = vf.g;
    row.grad_g_anchor = vf.grad;
    row.e1 = e1;
    row.e2 = e2;
    row.e3 = e3;
    row.merit = merit_next;
    row.merit_prev = merit_prev;
    row.objective = objective;
    row.objective_star = objective_star;
    row.phi_next = phi_next;
    row.inner_sweeps = ama.sweeps;
    row.psi_sweep_values = ama.psi_values;
    row.elapsed_s = elapsed();
    out.trace.rows.push_back(std::move(row));

    y = ama.y;
    v = ama.v;
    vf = vf_next;
    phi_k = phi_next;
    out.flow = std::move(ama.flow);

    if (e1 <= config.eps1 && e2 <= config.eps2 && e3 <= config.eps3) {
      converged = true;
      break;
    }
    if (e3 > config.eps3) rho *= config.sigma;
    beta = beta_for(config, rho);
  }

  out.y = y;
  out.v_star = vf.ue_flow;
  out.trace.y_final = y;
  out.trace.v_final = v;
  out.certificate.converged = converged;
  out.certificate.e1 = e1;
  out.certificate.e2 = e2;
  out.certificate.e3 = e3;
  out.certificate.rho_final = rho;
  out.certificate.phi_final = phi_k;
  out.certificate.outer_iters = static_cast<int>(out.trace.rows.size());
  return out;
}

double merit(const Network& net, const DemandTable& demand, double eta,
             std::span<const double> y, std::span<const double> v, double rho, double ue_tol) {
  GapValue gap = gap_function(net, demand, y, v, ue_tol);
  return designer_objective(net, y, v, eta) + rho * gap.gap;
}

std::pair<double, double> theorem2_tolerances(double eps, double theta_u) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(theta_u > 0.0)) throw ValidationError("theta_u must be positive");
  return {eps / (2.0 * std::sqrt(2.0) * theta_u), eps};
}

}  // namespace capex
