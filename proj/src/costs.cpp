#include "capex/costs.hpp"

#include <cassert>
#include <cmath>

#include "capex/assign.hpp"

namespace capex {

namespace {

inline double pow4(double x) {
  double x2 = x * x;
  return x2 * x2;
}

}  // namespace

double bpr_time(const Link& link, double y, double v) {
  double r = v / (link.cap + y);
  return link.t0 * (1.0 + 0.15 * pow4(r));
}

double bpr_time_dv(const Link& link, double y, double v) {
  double c = link.cap + y;
  double r = v / c;
  return 0.6 * link.t0 * r * r * r / c;
}

double bpr_time_dvdv(const Link& link, double y, double v) {
  double c = link.cap + y;
  double r = v / c;
  return 1.8 * link.t0 * r * r / (c * c);
}

double bpr_integral(const Link& link, double y, double v) {
  double c = link.cap + y;
  return link.t0 * v + 0.03 * link.t0 * v * pow4(v / c);
}

double bpr_dy_integral(const Link& link, double y, double v) {
  double c = link.cap + y;
  return -0.12 * link.t0 * v * pow4(v / c) / c;
}

double bpr_time_dy(const Link& link, double y, double v) {
  double c = link.cap + y;
  return -0.6 * link.t0 * pow4(v / c) / c;
}

double expansion_cost(const Link& link, double y) { return link.bcoef * y * y; }

double expansion_cost_dy(const Link& link, double y) { return 2.0 * link.bcoef * y; }

double designer_objective(const Network& net, std::span<const double> y,
                          std::span<const double> v, double eta) {
  double total = 0.0;
  for (int a = 0; a < net.num_links(); ++a) {
    const Link& link = net.link(a);
    total += bpr_time(link, y[a], v[a]) * v[a] + eta * expansion_cost(link, y[a]);
  }
  return total;
}

double beckmann_potential(const Network& net, std::span<const double> y,
                          std::span<const double> v) {
  double total = 0.0;
  for (int a = 0; a < net.num_links(); ++a) total += bpr_integral(net.link(a), y[a], v[a]);
  return total;
}

ValueFunction linearize_value_function(const Network& net, const DemandTable& demand,
                                       std::span<const double> y, double ue_tol,
                                       const FlowState* warm, FlowState* warm_out) {
  AssignResult res = solve_ue(net, demand, y, ue_tol, warm);
  ValueFunction out;
  out.g = res.potential_value;
  out.ue_rel_gap = res.rel_gap;
  out.converged = res.converged;
  out.ue_flow = res.flow.v;
  out.grad.resize(net.num_links());
  for (int a = 0; a < net.num_links(); ++a)
    out.grad[a] = bpr_dy_integral(net.link(a), y[a], res.flow.v[a]);
  if (warm_out) *warm_out = std::move(res.flow);
  return out;
}

std::vector<double> grad_g(const Network& net, const DemandTable& demand,
                           std::span<const double> y, double ue_tol) {
  return linearize_value_function(net, demand, y, ue_tol).grad;
}

GapValue gap_function(const Network& net, const DemandTable& demand, std::span<const double> y,
                      std::span<const double> v, double ue_tol, const FlowState* warm,
                      FlowState* warm_out) {
  AssignResult res = solve_ue(net, demand, y, ue_tol, warm);
  if (!res.converged)
    throw SolveError("equilibrium solve for the gap function did not converge");
  GapValue out;
  out.g = res.potential_value;
  out.ue_rel_gap = res.rel_gap;
  out.gap = beckmann_potential(net, y, v) - out.g;
  if (warm_out) *warm_out = std::move(res.flow);
  return out;
}

double InnerObjectiveParams::aggregate_constant() const {
  double dot = 0.0;
  for (size_t a = 0; a < y_anchor.size(); ++a) dot += grad_g_anchor[a] * y_anchor[a];
  return -rho * g_anchor + rho * dot;
}

double majorant_phi(const Network& net, const InnerObjectiveParams& params,
                    std::span<const double> y, std::span<const double> v) {
  double lin = params.g_anchor;
  for (int a = 0; a < net.num_links(); ++a)
    lin += params.grad_g_anchor[a] * (y[a] - params.y_anchor[a]);
  return beckmann_potential(net, y, v) - lin;
}

double psi_link(const Link& link, const InnerObjectiveParams& params, double y_a, double v_a) {
  int a = link.id;
  double dy = y_a - params.y_anchor[a];
  double dv = v_a - params.v_anchor[a];
  return bpr_time(link, y_a, v_a) * v_a + params.eta * expansion_cost(link, y_a) +
         params.rho * bpr_integral(link, y_a, v_a) -
         params.rho * params.grad_g_anchor[a] * y_a +
         params.rho * params.beta * (dy * dy + dv * dv);
}

double psi_link_dy(const Link& link, const InnerObjectiveParams& params, double y_a, double v_a) {
  int a = link.id;
  return bpr_time_dy(link, y_a, v_a) * v_a + params.eta * expansion_cost_dy(link, y_a) +
         params.rho * bpr_dy_integral(link, y_a, v_a) - params.rho * params.grad_g_anchor[a] +
         2.0 * params.rho * params.beta * (y_a - params.y_anchor[a]);
}

double psi_total(const Network& net, const InnerObjectiveParams& params,
                 std::span<const double> y, std::span<const double> v) {
  double total = params.aggregate_constant();
  for (int a = 0; a < net.num_links(); ++a) total += psi_link(net.link(a), params, y[a], v[a]);
  return total;
}

double assignment_cost(const Link& link, const InnerObjectiveParams& params, double y_a,
                       double v_a) {
  return (1.0 + params.rho) * bpr_time(link, y_a, v_a) + v_a * bpr_time_dv(link, y_a, v_a) +
         2.0 * params.rho * params.beta * (v_a - params.v_anchor[link.id]);
}

double assignment_cost_dv(const Link& link, const InnerObjectiveParams& params, double y_a,
                          double v_a) {
  return (2.0 + params.rho) * bpr_time_dv(link, y_a, v_a) +
         v_a * bpr_time_dvdv(link, y_a, v_a) + 2.0 * params.rho * params.beta;
}

}  // namespace capex
