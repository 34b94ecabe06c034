#pragma once

#include <span>
#include <vector>

#include "capex/network.hpp"

namespace capex {

// --- BPR link time and closed-form antiderivatives -------------------------

/// t0 * (1 + 0.15 * (v / (cap + y))^4)
double bpr_time(const Link& link, double y, double v);
/// d bpr_time / dv = 0.6 * t0 * v^3 / (cap + y)^4
double bpr_time_dv(const Link& link, double y, double v);
/// d^2 bpr_time / dv^2
double bpr_time_dvdv(const Link& link, double y, double v);
/// Integral of bpr_time over flow: t0*v + 0.03*t0*v^5 / (cap + y)^4
double bpr_integral(const Link& link, double y, double v);
/// d bpr_integral / dy = -0.12 * t0 * v^5 / (cap + y)^5
double bpr_dy_integral(const Link& link, double y, double v);
/// d bpr_time / dy (marginal time per capacity unit at fixed flow)
double bpr_time_dy(const Link& link, double y, double v);

/// Quadratic monetary cost of adding capacity y: bcoef * y^2.
double expansion_cost(const Link& link, double y);
double expansion_cost_dy(const Link& link, double y);

// --- Aggregate objectives ---------------------------------------------------

/// Designer objective F(y, v) = <t(y,v), v> + eta * sum_a G_a(y_a).
double designer_objective(const Network& net, std::span<const double> y,
                          std::span<const double> v, double eta);

/// Beckmann potential f(v; y) = sum_a integral of the link time.
double beckmann_potential(const Network& net, std::span<const double> y,
                          std::span<const double> v);

// --- Value function and gap -------------------------------------------------

struct ValueFunction {
  double g = 0.0;                 // min Beckmann potential at y
  std::vector<double> grad;      // per-link gradient of g
  std::vector<double> ue_flow;   // equilibrium link flows
  double ue_rel_gap = 0.0;       // certified relative gap of the inner solve
  bool converged = true;
};

/// Solves the equilibrium at y and evaluates g(y) with its gradient.
ValueFunction linearize_value_function(const Network& net, const DemandTable& demand,
                                       std::span<const double> y, double ue_tol,
                                       const struct FlowState* warm = nullptr,
                                       struct FlowState* warm_out = nullptr);

/// Per-link gradient of g at y (one equilibrium solve).
std::vector<double> grad_g(const Network& net, const DemandTable& demand,
                           std::span<const double> y, double ue_tol);

struct GapValue {
  double gap = 0.0;        // f(v; y) - g(y)
  double g = 0.0;          // value function at y
  double ue_rel_gap = 0.0; // certified gap of the inner solve
};

/// Gap function phi(y, v); nonnegative up to the inner solver's certified gap.
GapValue gap_function(const Network& net, const DemandTable& demand, std::span<const double> y,
                      std::span<const double> v, double ue_tol,
                      const struct FlowState* warm = nullptr,
                      struct FlowState* warm_out = nullptr);

// --- Inner objective of the linearized subproblem ---------------------------

/// Anchor data and weights for one linearized subproblem.
struct InnerObjectiveParams {
  double rho = 1.0;
  double beta = 1.0;
  double eta = 1.0;
  std::vector<double> y_anchor;
  std::vector<double> v_anchor;
  std::vector<double> grad_g_anchor;
  double g_anchor = 0.0;

  /// Additive constant carried at aggregate level:
  /// -rho * g(y^k) + rho * <grad g(y^k), y^k>.
  double aggregate_constant() const;
};

/// Linearized majorant of the gap function:
/// Phi(y, v) = f(v; y) - [g(y^k) + <grad g(y^k), y - y^k>].
double majorant_phi(const Network& net, const InnerObjectiveParams& params,
                    std::span<const double> y, std::span<const double> v);

/// Separable piece of the inner objective (without the aggregate constant).
double psi_link(const Link& link, const InnerObjectiveParams& params, double y_a, double v_a);
/// Partial derivative of psi_link in y_a.
double psi_link_dy(const Link& link, const InnerObjectiveParams& params, double y_a, double v_a);

/// Full inner objective: sum of psi_link plus the aggregate constant; equals
/// F + rho*Phi + rho*beta*||(y - y^k, v - v^k)||^2.
double psi_total(const Network& net, const InnerObjectiveParams& params,
                 std::span<const double> y, std::span<const double> v);

/// Generalized assignment cost of the flow block:
/// s_a = (1 + rho) * t_a + v_a * dt_a/dv + 2*rho*beta*(v_a - v_a^k).
double assignment_cost(const Link& link, const InnerObjectiveParams& params, double y_a,
                       double v_a);
double assignment_cost_dv(const Link& link, const InnerObjectiveParams& params, double y_a,
                          double v_a);

}  // namespace capex
