#pragma once

#include <span>
#include <vector>

#include "capex/assign.hpp"
#include "capex/costs.hpp"
#include "capex/network.hpp"

namespace capex {

enum class BetaRule {
  midpoint,   // beta^k = (theta_l + theta_u) / (2 rho^k), the interval midpoint
  sum,        // beta^k = (theta_l + theta_u) / rho^k
};

struct PdcConfig {
  int tau = 1;
  double eta = 1.0;
  double eps1 = 1e-3, eps2 = 1e-3, eps3 = 1e-3;
  double rho0 = 1.0;
  double sigma = 1.25;       // penalty growth factor, > 1
  double theta_l = 10.0;     // bounds on rho * beta
  double theta_u = 20.0;
  BetaRule beta_rule = BetaRule::midpoint;
  double inner_tol = 1e-6;   // fixed-point tolerance of the alternation
  double assign_tol = 1e-6;  // relative gap of inner assignment solves
  int max_outer = 2000;
  int max_inner = 200;

  void validate() const;
};

/// Per-outer-iteration record. Anchors plus the stored linearization make
/// every error metric recomputable from the trace alone.
struct PdcIterate {
  int k = 0;
  double rho = 0.0, beta = 0.0;
  std::vector<double> y, v;            // iterate k (the anchor of subproblem k)
  double g_anchor = 0.0;               // g(y^k)
  std::vector<double> grad_g_anchor;   // grad g(y^k)
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double merit = 0.0;                  // psi(y^{k+1}, v^{k+1}; rho^k)
  double merit_prev = 0.0;             // psi(y^k, v^k; rho^k)
  double objective = 0.0;              // F(y^{k+1}, v^{k+1})
  double objective_star = 0.0;         // F(y^{k+1}, v*(y^{k+1}))
  double phi_next = 0.0;               // phi(y^{k+1}, v^{k+1})
  int inner_sweeps = 0;
  std::vector<double> psi_sweep_values;  // Psi^k after every alternation sweep
  double elapsed_s = 0.0;
};

struct PdcTrace {
  std::vector<PdcIterate> rows;
  std::vector<double> y_final, v_final;
};

struct KktCertificate {
  bool converged = false;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double rho_final = 0.0;  // multiplier surrogate at termination
  double phi_final = 0.0;  // confirmed by one extra equilibrium solve
  int outer_iters = 0;
};

struct AmaResult {
  std::vector<double> y;
  std::vector<double> v;
  FlowState flow;
  int sweeps = 0;
  bool fixed_point = false;
  std::vector<double> psi_values;  // Psi^k(y^{k,j+1}, v^{k,j+1}) per sweep
};

/// Alternating minimization for one linearized subproblem: flow step by
/// assignment with the generalized cost, expansion step by the closed-form
/// cardinality rule, until a (y, v) fixed point.
AmaResult ama_solve(const Network& net, const DemandTable& demand, const PdcConfig& config,
                    const InnerObjectiveParams& params, std::span<const double> y_init,
                    const FlowState* warm = nullptr);

struct PdcResult {
  std::vector<double> y;
  FlowState flow;          // flow state of the final iterate
  std::vector<double> v_star;  // equilibrium flows at the final plan
  KktCertificate certificate;
  PdcTrace trace;
};

/// Penalized difference-of-convex outer loop: repeatedly solves the linearized
/// subproblem while growing the penalty and shrinking the regularization.
PdcResult pdc_solve(const Network& net, const DemandTable& demand, const PdcConfig& config,
                    std::span<const double> y0);

/// Merit value F(y, v) + rho * phi(y, v); solves one equilibrium for phi.
double merit(const Network& net, const DemandTable& demand, double eta,
             std::span<const double> y, std::span<const double> v, double rho, double ue_tol);

/// Tolerance calibration that makes the certificate an eps-approximate KKT
/// certificate: eps2 = eps / (2 sqrt(2) theta_u), eps3 = eps.
std::pair<double, double> theorem2_tolerances(double eps, double theta_u);

}  // namespace capex
