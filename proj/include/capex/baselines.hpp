#pragma once

#include <span>
#include <utility>
#include <vector>

#include "capex/assign.hpp"
#include "capex/network.hpp"

namespace capex {

struct ReferencePoints {
  double f0 = 0.0;   // objective at user equilibrium with no expansion
  double fso = 0.0;  // system-optimal objective with equilibrium and budget removed
  bool converged = true;
  std::vector<double> y_so, v_so;  // the system-optimal plan and flows
};

/// Timestamped best-so-far objective values of a method run.
struct Trajectory {
  std::vector<std::pair<double, double>> points;  // (elapsed_s, objective)
  void record(double elapsed_s, double objective);
};

ReferencePoints compute_references(const Network& net, const DemandTable& demand, double eta,
                                   double tol);

/// (f - fso) / (f0 - fso); requires f0 > fso.
double relative_scale(double f, const ReferencePoints& refs);

/// Marginal objective decrease per unit of expansion at the status quo,
/// estimated by forward differences with warm-started equilibrium solves.
/// Links with umax = 0 receive -infinity and are never selected.
std::vector<double> sensitivity_scores(const Network& net, const DemandTable& demand, double eta,
                                       double fd_step, double tol);

struct RestrictedResult {
  std::vector<double> y;
  double objective = 0.0;  // F(y, v*(y)) at the returned plan
  bool converged = true;
  int iters = 0;
  Trajectory trajectory;
};

/// Projected gradient descent on the implicit objective over the box, with the
/// plan fixed to zero off the given support. Gradients by central finite
/// differences with warm-started equilibrium solves.
RestrictedResult solve_restricted_bcep(const Network& net, const DemandTable& demand, double eta,
                                       const std::vector<int>& support, double tol,
                                       int max_iters, std::span<const double> y_init = {});

struct M1Result {
  std::vector<double> y;
  double objective = 0.0;
  std::vector<int> support;  // 0-based link ids, ascending
  Trajectory trajectory;
};

/// Sensitivity prescreening: pick the tau best-scoring links, then solve the
/// restricted problem on that support.
M1Result run_m1(const Network& net, const DemandTable& demand, double eta, int tau, double tol);

struct AlphaStep {
  double alpha = 0.0;
  int support_size = 0;
  bool accepted = false;  // support within budget
};

struct M2Result {
  std::vector<double> y;
  double objective = 0.0;
  std::vector<AlphaStep> log;
  double accepted_alpha = 0.0;
  std::vector<int> support;
  bool ok = true;
  Trajectory trajectory;
};

/// l1-regularized search: grow alpha geometrically until the support fits the
/// budget, refine downward in small multiplicative steps, keep the last
/// feasible alpha, then debias on the identified support.
M2Result run_m2(const Network& net, const DemandTable& demand, double eta, int tau,
                double alpha0, double gamma_c, double gamma_r, double tol);

struct OracleResult {
  std::vector<double> y;
  double objective = 0.0;
  std::vector<int> support;
  Trajectory trajectory;
};

/// Enumerates every support of size <= tau; per support, grid-search the
/// expansion levels with one equilibrium solve per grid point and refine the
/// best candidate by the restricted solver. Guarded to small instances.
OracleResult brute_force_ccbcep(const Network& net, const DemandTable& demand, double eta,
                                int tau, int grid, double tol);

}  // namespace capex
