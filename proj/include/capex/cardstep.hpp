#pragma once

#include <functional>
#include <span>
#include <vector>

#include "capex/network.hpp"

namespace capex {

/// One-dimensional strongly convex piece on [0, umax].
struct ScalarPiece {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

struct ScalarMin {
  double y = 0.0;
  double value = 0.0;
};

/// Minimizes a strongly convex piece on [0, umax] by bisection on the
/// derivative sign; returns the boundary when the derivative has constant sign.
ScalarMin solve_scalar(const ScalarPiece& piece, double umax, double tol);

/// Membership in the cardinality set: box bounds plus a support budget.
bool is_member(std::span<const double> y, std::span<const double> umax, int tau,
               double zero_tol);

/// Exact minimizer of a link-separable objective over the cardinality set:
/// per-link scalar solves, then the tau most improving links keep their
/// minimizers and the rest are zeroed.
std::vector<double> solve_cardinality_step(const std::vector<ScalarPiece>& pieces,
                                           std::span<const double> umax, int tau, double tol);

/// Brute-force reference: enumerates all supports of size <= tau and minimizes
/// each active piece by grid scan with local refinement. Guarded to small
/// instances; value-based, independent of the derivative bisection above.
std::vector<double> exhaustive_cardinality_oracle(const std::vector<ScalarPiece>& pieces,
                                                  std::span<const double> umax, int tau,
                                                  int grid_points);

}  // namespace capex
