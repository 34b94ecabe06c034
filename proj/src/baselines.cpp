#include "capex/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "capex/cardstep.hpp"
#include "capex/costs.hpp"

namespace capex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// F(y, v*(y)) with a warm-started equilibrium solve per evaluation.
class ImplicitObjective {
 public:
  ImplicitObjective(const Network& net, const DemandTable& demand, double eta, double ue_tol)
      : net_(net), demand_(demand), eta_(eta), tol_(ue_tol) {}

  double operator()(std::span<const double> y) {
    AssignResult res = solve_ue(net_, demand_, y, tol_, warm_.empty() ? nullptr : &warm_);
    warm_ = std::move(res.flow);
    return designer_objective(net_, y, warm_.v, eta_);
  }

 private:
  const Network& net_;
  const DemandTable& demand_;
  double eta_;
  double tol_;
  FlowState warm_;
};

double support_zero_tol(const Network& net) {
  double max_cap = 0.0;
  for (const Link& l : net.links()) max_cap = std::max(max_cap, l.cap);
  return 1e-6 * max_cap;
}

std::vector<int> positive_support(const Network& net, std::span<const double> y) {
  double zero_tol = support_zero_tol(net);
  std::vector<int> support;
  for (size_t a = 0; a < y.size(); ++a)
    if (y[a] > zero_tol) support.push_back(static_cast<int>(a));
  return support;
}

// Central finite-difference gradient of the implicit objective over the given
// coordinates; one-sided at the lower box boundary.
std::vector<double> fd_gradient(ImplicitObjective& objective, const Network& net,
                                std::span<const double> y, double base_value,
                                const std::vector<int>& coords) {
  std::vector<double> grad(coords.size(), 0.0);
  std::vector<double> probe(y.begin(), y.end());
  for (size_t i = 0; i < coords.size(); ++i) {
    int a = coords[i];
    double step = 1e-4 * net.link(a).cap;
    double hi = std::min(y[a] + step, net.link(a).umax);
    double lo = std::max(y[a] - step, 0.0);
    if (hi <= lo) continue;
    probe[a] = hi;
    double f_hi = objective(probe);
    double f_lo = base_value;
    if (lo < y[a]) {
      probe[a] = lo;
      f_lo = objective(probe);
    }
    probe[a] = y[a];
    grad[i] = (f_hi - f_lo) / (hi - lo);
  }
  return grad;
}

struct DescentOutcome {
  std::vector<double> y;
  double objective = 0.0;  // implicit objective only, without any penalty
  bool converged = false;
  int iters = 0;
};

// Projected descent over the box on F*(y) + alpha * ||y||_1, restricted to the
// given coordinates. alpha = 0 recovers the plain restricted descent step.
// support_patience > 0 stops early once the support stays unchanged that many
// iterations (used by the l1 search, where only the support matters).
DescentOutcome projected_descent(ImplicitObjective& objective, const Network& net,
                                 std::span<const double> y_init, const std::vector<int>& coords,
                                 double alpha, double tol, int max_iters,
                                 Trajectory* trajectory = nullptr,
                                 Clock::time_point t0 = Clock::now(),
                                 int support_patience = 0) {
  DescentOutcome out;
  out.y.assign(y_init.begin(), y_init.end());
  out.objective = objective(out.y);
  double composite = out.objective;
  for (int a : coords) composite += alpha * out.y[a];
  if (trajectory) trajectory->record(seconds_since(t0), out.objective);
  std::vector<int> last_support = positive_support(net, out.y);
  int stable_iters = 0;

  double step = 0.0;  // chosen on the first iteration from the gradient scale
  int restarts = 0;
  for (int it = 0; it < max_iters; ++it) {
    out.iters = it + 1;
    std::vector<double> grad = fd_gradient(objective, net, out.y, out.objective, coords);
    for (double& g : grad) g += alpha;

    double grad_norm = 0.0;
    for (double g : grad) grad_norm = std::max(grad_norm, std::abs(g));
    if (grad_norm < 1e-300) {
      out.converged = true;
      break;
    }
    if (step <= 0.0) {
      double cap_scale = 0.0;
      for (int a : coords) cap_scale = std::max(cap_scale, net.link(a).cap);
      step = 0.25 * std::max(cap_scale, 1e-12) / grad_norm;
    } else {
      step *= 2.0;
    }

    double y_scale_now = 0.0;
    for (int a : coords) y_scale_now = std::max(y_scale_now, std::abs(out.y[a]));
    auto trial = [&](double t, std::vector<double>& y_out) {
      double value = 0.0;
      y_out = out.y;
      for (size_t i = 0; i < coords.size(); ++i) {
        int a = coords[i];
        y_out[a] = std::clamp(out.y[a] - t * grad[i], 0.0, net.link(a).umax);
      }
      value = objective(y_out);
      double comp = value;
      for (int a : coords) comp += alpha * y_out[a];
      return std::pair<double, double>(value, comp);
    };

    std::vector<double> y_new(out.y.begin(), out.y.end());
    double composite_new = composite;
    double f_accept = out.objective;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      double moved = 0.0;
      std::vector<double> y_try;
      auto [f_try, comp_try] = trial(step, y_try);
      for (int a : coords) moved = std::max(moved, std::abs(y_try[a] - out.y[a]));
      if (moved <= 1e-14 * (1.0 + y_scale_now)) break;
      double predicted = 0.0;
      for (size_t i = 0; i < coords.size(); ++i)
        predicted += grad[i] * (out.y[coords[i]] - y_try[coords[i]]);
      if (comp_try <= composite - 1e-4 * predicted) {
        y_new = std::move(y_try);
        composite_new = comp_try;
        f_accept = f_try;
        accepted = true;
        // Expand while the step keeps paying off; descent paths on the
        // implicit objective routinely need to cross shallow ridges.
        for (int ex = 0; ex < 40; ++ex) {
          std::vector<double> y_more;
          auto [f_more, comp_more] = trial(step * 2.0, y_more);
          if (comp_more < composite_new - 1e-12 * std::abs(composite_new)) {
            step *= 2.0;
            y_new = std::move(y_more);
            composite_new = comp_more;
            f_accept = f_more;
          } else {
            break;
          }
        }
        out.objective = f_accept;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // A stalled line search can be an artifact of the accumulated step
      // scale; retry once from a fresh scale before declaring convergence.
      if (restarts++ < 2) {
        step = 0.0;
        continue;
      }
      out.converged = true;
      break;
    }

    double max_move = 0.0, y_scale = 0.0;
    for (int a : coords) {
      max_move = std::max(max_move, std::abs(y_new[a] - out.y[a]));
      y_scale = std::max(y_scale, std::abs(out.y[a]));
    }
    out.y = std::move(y_new);
    double improvement = composite - composite_new;
    composite = composite_new;
    if (trajectory) trajectory->record(seconds_since(t0), out.objective);
    if (max_move <= tol * (1.0 + y_scale) &&
        improvement <= 1e-10 * (1.0 + std::abs(composite))) {
      // Distinguish a genuine stationary point from a collapsed step scale.
      if (restarts++ < 2) {
        step = 0.0;
        continue;
      }
      out.converged = true;
      break;
    }
    if (support_patience > 0) {
      std::vector<int> support = positive_support(net, out.y);
      if (support == last_support) {
        if (++stable_iters >= support_patience) break;
      } else {
        last_support = std::move(support);
        stable_iters = 0;
      }
    }
  }
  return out;
}

}  // namespace

void Trajectory::record(double elapsed_s, double objective) {
  if (!points.empty() && objective >= points.back().second) return;
  points.emplace_back(elapsed_s, objective);
}

ReferencePoints compute_references(const Network& net, const DemandTable& demand, double eta,
                                   double tol) {
  if (!(tol > 0.0)) throw ValidationError("reference tolerance must be positive");
  ReferencePoints refs;
  std::vector<double> zero(net.num_links(), 0.0);

  AssignResult ue = solve_ue(net, demand, zero, tol);
  refs.converged = ue.converged;
  refs.f0 = designer_objective(net, zero, ue.flow.v, eta);

  // System optimum over (y, v) jointly: alternate the marginal-cost assignment
  // with per-link box-constrained minimization of t(y,v)v + eta*G(y).
  std::vector<double> y(net.num_links(), 0.0);
  FlowState warm;
  double prev = kInf;
  refs.fso = refs.f0;
  for (int it = 0; it < 500; ++it) {
    AssignResult so = solve_so_assignment(net, demand, y, tol, warm.empty() ? nullptr : &warm);
    refs.converged = refs.converged && so.converged;
    warm = std::move(so.flow);
    for (int a = 0; a < net.num_links(); ++a) {
      const Link& link = net.link(a);
      double v_a = warm.v[a];
      ScalarPiece piece{
          [&link, v_a, eta](double yy) {
            return bpr_time(link, yy, v_a) * v_a + eta * expansion_cost(link, yy);
          },
          [&link, v_a, eta](double yy) {
            return bpr_time_dy(link, yy, v_a) * v_a + eta * expansion_cost_dy(link, yy);
          }};
      y[a] = solve_scalar(piece, link.umax, 1e-12 * std::max(link.umax, 1.0)).y;
    }
    refs.fso = designer_objective(net, y, warm.v, eta);
    if (prev - refs.fso <= tol * std::max(1.0, std::abs(refs.fso)) && it > 0) break;
    prev = refs.fso;
    if (it == 499) refs.converged = false;
  }
  refs.y_so = y;
  refs.v_so = warm.v;
  return refs;
}

double relative_scale(double f, const ReferencePoints& refs) {
  if (!(refs.f0 > refs.fso))
    throw ValidationError("degenerate instance: f0 must exceed fso");
  return (f - refs.fso) / (refs.f0 - refs.fso);
}

std::vector<double> sensitivity_scores(const Network& net, const DemandTable& demand, double eta,
                                       double fd_step, double tol) {
  if (!(fd_step > 0.0)) throw ValidationError("finite-difference step must be positive");
  ImplicitObjective objective(net, demand, eta, tol);
  std::vector<double> zero(net.num_links(), 0.0);
  double base = objective(zero);

  std::vector<double> scores(net.num_links(), -kInf);
  std::vector<double> probe(zero);
  for (int a = 0; a < net.num_links(); ++a) {
    const Link& link = net.link(a);
    if (link.umax <= 0.0) continue;
    double delta = std::min(fd_step * link.cap, link.umax);
    probe[a] = delta;
    double f = objective(probe);
    probe[a] = 0.0;
    scores[a] = -(f - base) / delta;
  }
  return scores;
}

RestrictedResult solve_restricted_bcep(const Network& net, const DemandTable& demand, double eta,
                                       const std::vector<int>& support, double tol,
                                       int max_iters, std::span<const double> y_init) {
  if (support.empty()) throw ValidationError("restricted solve needs a nonempty support");
  for (int a : support)
    if (a < 0 || a >= net.num_links())
      throw ValidationError("restricted support references an unknown link");

  const auto t0 = Clock::now();
  ImplicitObjective objective(net, demand, eta, 1e-9);
  std::vector<double> y(net.num_links(), 0.0);
  if (!y_init.empty()) {
    y.assign(y_init.begin(), y_init.end());
    for (int a = 0; a < net.num_links(); ++a)
      if (std::find(support.begin(), support.end(), a) == support.end()) y[a] = 0.0;
  }

  RestrictedResult out;
  DescentOutcome o =
      projected_descent(objective, net, y, support, 0.0, tol, max_iters, &out.trajectory, t0);
  out.y = std::move(o.y);
  out.objective = o.objective;
  out.converged = o.converged;
  out.iters = o.iters;
  return out;
}

M1Result run_m1(const Network& net, const DemandTable& demand, double eta, int tau, double tol) {
  if (tau < 1) throw ValidationError("m1 needs a positive budget");
  const auto t0 = Clock::now();
  std::vector<double> scores = sensitivity_scores(net, demand, eta, 1e-4, tol);

  std::vector<int> order(net.num_links());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });

  M1Result out;
  for (int a : order) {
    if (static_cast<int>(out.support.size()) >= tau) break;
    if (scores[a] == -kInf) break;
    out.support.push_back(a);
  }
  std::sort(out.support.begin(), out.support.end());
  if (out.support.empty()) throw ValidationError("no expandable links available");

  double prescreen_s = seconds_since(t0);
  RestrictedResult res = solve_restricted_bcep(net, demand, eta, out.support, tol, 500);
  out.y = std::move(res.y);
  out.objective = res.objective;
  for (const auto& [t, f] : res.trajectory.points) out.trajectory.record(prescreen_s + t, f);
  return out;
}

M2Result run_m2(const Network& net, const DemandTable& demand, double eta, int tau,
                double alpha0, double gamma_c, double gamma_r, double tol) {
  if (!(alpha0 > 0.0) || !(gamma_c > 1.0) || !(gamma_r > 0.0 && gamma_r < 1.0))
    throw ValidationError("m2 needs alpha0 > 0, gamma_c > 1, 0 < gamma_r < 1");
  const auto t0 = Clock::now();
  ImplicitObjective objective(net, demand, eta, 1e-9);

  std::vector<int> coords;
  for (int a = 0; a < net.num_links(); ++a)
    if (net.link(a).umax > 0.0) coords.push_back(a);
  if (coords.empty()) throw ValidationError("no expandable links available");

  M2Result out;
  std::vector<double> y(net.num_links(), 0.0);

  auto solve_alpha = [&](double alpha) -> std::vector<int> {
    DescentOutcome o =
        projected_descent(objective, net, y, coords, alpha, tol, 200, nullptr, t0, 15);
    y = o.y;
    std::vector<int> supp = positive_support(net, y);
    if (static_cast<int>(supp.size()) <= tau)
      out.trajectory.record(seconds_since(t0), o.objective);
    return supp;
  };

  // Coarse phase: grow alpha until the support fits the budget.
  double alpha = alpha0;
  std::vector<double> y_accepted;
  std::vector<int> supp_accepted;
  while (true) {
    std::vector<int> supp = solve_alpha(alpha);
    bool fits = static_cast<int>(supp.size()) <= tau;
    out.log.push_back({alpha, static_cast<int>(supp.size()), fits});
    if (fits) {
      out.accepted_alpha = alpha;
      y_accepted = y;
      supp_accepted = supp;
      break;
    }
    alpha *= gamma_c;
    if (alpha > 1e6 * alpha0) {
      out.ok = false;
      return out;
    }
  }

  // Refinement phase: shrink alpha until the budget is violated, keep the last
  // alpha that still satisfies it.
  while (true) {
    double alpha_try = alpha * gamma_r;
    std::vector<int> supp = solve_alpha(alpha_try);
    bool fits = static_cast<int>(supp.size()) <= tau;
    out.log.push_back({alpha_try, static_cast<int>(supp.size()), fits});
    if (!fits) break;
    alpha = alpha_try;
    out.accepted_alpha = alpha;
    y_accepted = y;
    supp_accepted = supp;
  }

  out.support = supp_accepted;
  if (out.support.empty()) {
    // Nothing worth expanding at the accepted regularization level.
    out.y.assign(net.num_links(), 0.0);
    std::vector<double> zero(net.num_links(), 0.0);
    out.objective = objective(zero);
    out.trajectory.record(seconds_since(t0), out.objective);
    return out;
  }

  RestrictedResult debiased =
      solve_restricted_bcep(net, demand, eta, out.support, tol, 500, y_accepted);
  out.y = std::move(debiased.y);
  out.objective = debiased.objective;
  out.trajectory.record(seconds_since(t0), out.objective);
  return out;
}

OracleResult brute_force_ccbcep(const Network& net, const DemandTable& demand, double eta,
                                int tau, int grid, double tol) {
  if (tau > 2) throw ValidationError("brute force guarded to tau <= 2");
  if (grid < 2) throw ValidationError("brute force needs at least 2 grid points");
  const int n = net.num_links();
  double combos = 1.0;
  for (int i = 0; i < tau; ++i) combos = combos * (n - i) / (i + 1);
  if (combos > 1e4) throw ValidationError("brute force guarded to 10^4 supports");

  const auto t0 = Clock::now();
  ImplicitObjective grid_objective(net, demand, eta, 1e-7);

  OracleResult out;
  std::vector<double> zero(n, 0.0);
  out.y = zero;
  out.objective = grid_objective(zero);
  out.trajectory.record(seconds_since(t0), out.objective);

  auto refine = [&](const std::vector<int>& support, std::span<const double> seed) {
    RestrictedResult res = solve_restricted_bcep(net, demand, eta, support, tol, 200, seed);
    if (res.objective < out.objective) {
      out.objective = res.objective;
      out.y = res.y;
      out.support = positive_support(net, out.y);
      out.trajectory.record(seconds_since(t0), out.objective);
    }
  };

  std::vector<double> probe(n, 0.0);
  if (tau >= 1) {
    for (int a = 0; a < n; ++a) {
      if (net.link(a).umax <= 0.0) continue;
      double best_obj = kInf;
      double best_y = 0.0;
      for (int i = 0; i < grid; ++i) {
        probe[a] = net.link(a).umax * i / (grid - 1);
        double f = grid_objective(probe);
        if (f < best_obj) {
          best_obj = f;
          best_y = probe[a];
        }
      }
      probe[a] = best_y;
      refine({a}, probe);
      probe[a] = 0.0;
    }
  }
  if (tau >= 2) {
    for (int a = 0; a < n; ++a) {
      if (net.link(a).umax <= 0.0) continue;
      for (int b = a + 1; b < n; ++b) {
        if (net.link(b).umax <= 0.0) continue;
        double best_obj = kInf;
        double best_ya = 0.0, best_yb = 0.0;
        for (int i = 0; i < grid; ++i) {
          probe[a] = net.link(a).umax * i / (grid - 1);
          for (int j = 0; j < grid; ++j) {
            probe[b] = net.link(b).umax * j / (grid - 1);
            double f = grid_objective(probe);
            if (f < best_obj) {
              best_obj = f;
              best_ya = probe[a];
              best_yb = probe[b];
            }
          }
        }
        probe[a] = best_ya;
        probe[b] = best_yb;
        refine({a, b}, probe);
        probe[a] = 0.0;
        probe[b] = 0.0;
      }
    }
  }
  return out;
}

}  // namespace capex
