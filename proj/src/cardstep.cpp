#include "capex/cardstep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capex {

ScalarMin solve_scalar(const ScalarPiece& piece, double umax, double tol) {
  if (!(tol > 0.0)) throw ValidationError("scalar solve tolerance must be positive");
  if (umax <= 0.0) return {0.0, piece.value(0.0)};

  double lo = 0.0, hi = umax;
  if (piece.deriv(lo) >= 0.0) return {0.0, piece.value(0.0)};
  if (piece.deriv(hi) <= 0.0) return {umax, piece.value(umax)};
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (piece.deriv(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double y = 0.5 * (lo + hi);
  return {y, piece.value(y)};
}

bool is_member(std::span<const double> y, std::span<const double> umax, int tau,
               double zero_tol) {
  int support = 0;
  for (size_t a = 0; a < y.size(); ++a) {
    if (y[a] < 0.0 || y[a] > umax[a]) return false;
    if (y[a] > zero_tol) ++support;
  }
  return support <= tau;
}

std::vector<double> solve_cardinality_step(const std::vector<ScalarPiece>& pieces,
                                           std::span<const double> umax, int tau, double tol) {
  const int n = static_cast<int>(pieces.size());
  std::vector<double> minimizer(n, 0.0);
  std::vector<double> score(n, 0.0);  // psi_a(y_a*) - psi_a(0), always <= 0
  double scale = 0.0;
  for (int a = 0; a < n; ++a) {
    ScalarMin m = solve_scalar(pieces[a], umax[a], std::max(tol * umax[a], 1e-300));
    double at_zero = pieces[a].value(0.0);
    minimizer[a] = m.y;
    score[a] = m.value - at_zero;
    scale = std::max(scale, std::abs(at_zero));
  }
  const double zero_gain = 1e-12 * std::max(scale, 1.0);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] < score[b]; });

  std::vector<double> y(n, 0.0);
  int taken = 0;
  for (int a : order) {
    if (taken >= tau) break;
    if (score[a] >= -zero_gain) break;  // no meaningful gain left
    y[a] = minimizer[a];
    ++taken;
  }
  return y;
}

std::vector<double> exhaustive_cardinality_oracle(const std::vector<ScalarPiece>& pieces,
                                                  std::span<const double> umax, int tau,
                                                  int grid_points) {
  const int n = static_cast<int>(pieces.size());
  if (n > 20 || tau > 3) throw ValidationError("exhaustive oracle limited to |A| <= 20, tau <= 3");
  if (grid_points < 3) throw ValidationError("oracle needs at least 3 grid points");

  // Value-only scalar minimization: grid scan plus golden-section refinement.
  auto grid_min = [&](int a) -> ScalarMin {
    const ScalarPiece& piece = pieces[a];
    if (umax[a] <= 0.0) return {0.0, piece.value(0.0)};
    double best_y = 0.0, best_v = piece.value(0.0);
    for (int i = 1; i < grid_points; ++i) {
      double y = umax[a] * i / (grid_points - 1);
      double v = piece.value(y);
      if (v < best_v) {
        best_v = v;
        best_y = y;
      }
    }
    double cell = umax[a] / (grid_points - 1);
    double lo = std::max(0.0, best_y - cell), hi = std::min(umax[a], best_y + cell);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = piece.value(x1), f2 = piece.value(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(umax[a], 1.0); ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = piece.value(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = piece.value(x2);
      }
    }
    double y = 0.5 * (lo + hi);
    double v = piece.value(y);
    if (best_v < v) return {best_y, best_v};
    return {y, v};
  };

  std::vector<ScalarMin> mins(n);
  std::vector<double> at_zero(n);
  for (int a = 0; a < n; ++a) {
    mins[a] = grid_min(a);
    at_zero[a] = pieces[a].value(0.0);
  }
  double base = std::accumulate(at_zero.begin(), at_zero.end(), 0.0);

  std::vector<double> best_y(n, 0.0);
  double best_obj = base;
  std::vector<int> support;
  // Enumerate supports of size 0..tau via nested index loops.
  std::function<void(int, int)> visit = [&](int start, int remaining) {
    if (remaining == 0) return;
    for (int a = start; a < n; ++a) {
      support.push_back(a);
      double obj = base;
      for (int s : support) obj += mins[s].value - at_zero[s];
      if (obj < best_obj) {
        best_obj = obj;
        std::fill(best_y.begin(), best_y.end(), 0.0);
        for (int s : support) best_y[s] = mins[s].y;
      }
      visit(a + 1, remaining - 1);
      support.pop_back();
    }
  };
  visit(0, tau);
  return best_y;
}

}  // namespace capex
