#include "capex/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace capex {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// --- Cost models -------------------------------------------------------------

UeCostModel::UeCostModel(const Network& net, std::span<const double> y)
    : net_(&net), y_(y.begin(), y.end()) {}

double UeCostModel::cost(int link, double v) const {
  return bpr_time(net_->link(link), y_[link], v);
}
double UeCostModel::cost_dv(int link, double v) const {
  return bpr_time_dv(net_->link(link), y_[link], v);
}
double UeCostModel::potential(int link, double v) const {
  return bpr_integral(net_->link(link), y_[link], v);
}

SoCostModel::SoCostModel(const Network& net, std::span<const double> y)
    : net_(&net), y_(y.begin(), y.end()) {}

double SoCostModel::cost(int link, double v) const {
  const Link& l = net_->link(link);
  return bpr_time(l, y_[link], v) + v * bpr_time_dv(l, y_[link], v);
}
double SoCostModel::cost_dv(int link, double v) const {
  const Link& l = net_->link(link);
  return 2.0 * bpr_time_dv(l, y_[link], v) + v * bpr_time_dvdv(l, y_[link], v);
}
double SoCostModel::potential(int link, double v) const {
  return bpr_time(net_->link(link), y_[link], v) * v;
}

InnerCostModel::InnerCostModel(const Network& net, const InnerObjectiveParams& params,
                               std::span<const double> y)
    : net_(&net), params_(&params), y_(y.begin(), y.end()) {}

double InnerCostModel::cost(int link, double v) const {
  return assignment_cost(net_->link(link), *params_, y_[link], v);
}
double InnerCostModel::cost_dv(int link, double v) const {
  return assignment_cost_dv(net_->link(link), *params_, y_[link], v);
}
double InnerCostModel::potential(int link, double v) const {
  const Link& l = net_->link(link);
  double dv = v - params_->v_anchor[link];
  return bpr_time(l, y_[link], v) * v + params_->rho * bpr_integral(l, y_[link], v) +
         params_->rho * params_->beta * dv * dv;
}

// --- Flow state ----------------------------------------------------------------

void FlowState::rebuild_link_flows(const Network& net) {
  v.assign(net.num_links(), 0.0);
  for (size_t w = 0; w < paths.per_od.size(); ++w) {
    for (size_t r = 0; r < paths.per_od[w].size(); ++r) {
      double flow = h[w][r];
      if (flow <= 0.0) continue;
      for (int a : paths.per_od[w][r].links) v[a] += flow;
    }
  }
}

// --- Path equilibration engine ---------------------------------------------------

namespace {

class Equilibrator {
 public:
  Equilibrator(const Network& net, const DemandTable& demand, const LinkCostModel& model)
      : net_(net), demand_(demand), model_(model), diff_(net.num_links(), 0) {
    for (size_t w = 0; w < demand_.entries.size(); ++w) {
      if (demand_.entries[w].demand <= 0.0) continue;
      int o = demand_.entries[w].origin;
      if (by_origin_.count(o) == 0) by_origin_[o] = {};
      by_origin_[o].push_back(static_cast<int>(w));
    }
    double min_t0 = kInf;
    for (const Link& l : net_.links()) min_t0 = std::min(min_t0, l.t0);
    eps_den_ = 1e-12 * demand_.total() * (net_.num_links() > 0 ? min_t0 : 1.0);
    pi_.assign(demand_.entries.size(), 0.0);
  }

  AssignResult run(const AssignOptions& opts, const FlowState* warm) {
    AssignResult out;
    if (demand_.total() <= 0.0) {
      out.flow.paths.per_od.resize(demand_.entries.size());
      out.flow.h.resize(demand_.entries.size());
      out.flow.v.assign(net_.num_links(), 0.0);
      out.converged = true;
      out.potential_value = potential_value(out.flow.v);
      return out;
    }

    if (warm && !warm->empty())
      init_from_warm(*warm);
    else
      init_all_or_nothing();
    state_.rebuild_link_flows(net_);

    int sweeps = 0;
    bool converged = false;
    double rel_gap = kInf;
    while (true) {
      rel_gap = certify_pass();
      if (rel_gap <= opts.tol) {
        converged = true;
        break;
      }
      if (sweeps >= opts.max_iters) break;
      sweep(opts.tol);
      state_.rebuild_link_flows(net_);
      ++sweeps;
    }

    out.flow = std::move(state_);
    out.rel_gap = rel_gap;
    out.iters = sweeps;
    out.converged = converged;
    out.potential_value = potential_value(out.flow.v);
    return out;
  }

 private:
  void init_from_warm(const FlowState& warm) {
    if (warm.paths.per_od.size() != demand_.entries.size() ||
        warm.h.size() != demand_.entries.size())
      throw ValidationError("warm start does not match the demand table");
    state_ = warm;
    route_index_.assign(demand_.entries.size(), {});
    for (size_t w = 0; w < state_.paths.per_od.size(); ++w) {
      double d = demand_.entries[w].demand;
      auto& routes = state_.paths.per_od[w];
      auto& flows = state_.h[w];
      if (routes.size() != flows.size())
        throw ValidationError("warm start route flows do not match its route set");
      double sum = 0.0;
      for (double f : flows) {
        if (f < 0.0) throw ValidationError("warm start carries negative route flow");
        sum += f;
      }
      if (d > 0.0) {
        if (std::abs(sum - d) > 1e-6 * std::max(1.0, d))
          throw ValidationError("warm start conserves a different demand");
        double scale = d / sum;
        for (double& f : flows) f *= scale;
      } else {
        for (double& f : flows) f = 0.0;
      }
      for (size_t r = 0; r < routes.size(); ++r) route_index_[w][routes[r].links] = static_cast<int>(r);
    }
  }

  void init_all_or_nothing() {
    state_.paths.per_od.assign(demand_.entries.size(), {});
    state_.h.assign(demand_.entries.size(), {});
    route_index_.assign(demand_.entries.size(), {});
    std::vector<double> cost(net_.num_links());
    for (int a = 0; a < net_.num_links(); ++a) cost[a] = model_.cost(a, 0.0);
    bool neg = std::any_of(cost.begin(), cost.end(), [](double c) { return c < 0.0; });
    for (const auto& [origin, ods] : by_origin_) {
      ShortestPathTree tree = solve_tree(cost, origin, neg);
      for (int w : ods) {
        std::vector<int> links = route_to(net_, tree, demand_.entries[w].destination);
        add_route(w, std::move(links), demand_.entries[w].demand);
      }
    }
  }

  ShortestPathTree solve_tree(std::span<const double> cost, int origin, bool neg) {
    if (!neg) return shortest_path(net_, cost, origin);
    try {
      return shortest_path_general(net_, cost, origin);
    } catch (const SolveError&) {
      // Negative cycle under transient costs: generate columns with floored
      // costs and leave certification to a later pass.
      certifiable_pass_ = false;
      std::vector<double> floored(cost.begin(), cost.end());
      double scale = 0.0;
      for (double c : cost) scale = std::max(scale, std::abs(c));
      for (double& c : floored) c = std::max(c, 1e-12 * std::max(scale, 1.0));
      return shortest_path(net_, floored, origin);
    }
  }

  int add_route(int w, std::vector<int> links, double flow) {
    auto& index = route_index_[w];
    auto it = index.find(links);
    if (it != index.end()) {
      state_.h[w][it->second] += flow;
      return it->second;
    }
    int r = static_cast<int>(state_.paths.per_od[w].size());
    index[links] = r;
    state_.paths.per_od[w].push_back(Route{std::move(links)});
    state_.h[w].push_back(flow);
    return r;
  }

  // Computes the certified relative gap at the current flows and generates the
  // current shortest route per OD pair.
  double certify_pass() {
    std::vector<double> cost(net_.num_links());
    for (int a = 0; a < net_.num_links(); ++a) cost[a] = model_.cost(a, state_.v[a]);
    bool neg = std::any_of(cost.begin(), cost.end(), [](double c) { return c < 0.0; });
    certifiable_pass_ = true;

    double total_cost = 0.0;
    for (int a = 0; a < net_.num_links(); ++a) total_cost += state_.v[a] * cost[a];
    double lower = 0.0;
    for (const auto& [origin, ods] : by_origin_) {
      ShortestPathTree tree = solve_tree(cost, origin, neg);
      for (int w : ods) {
        int dest = demand_.entries[w].destination;
        std::vector<int> links = route_to(net_, tree, dest);
        add_route(w, std::move(links), 0.0);
        pi_[w] = tree.dist[dest];
        lower += demand_.entries[w].demand * tree.dist[dest];
      }
    }
    if (!certifiable_pass_) return kInf;
    double gap = total_cost - lower;
    return gap / std::max(lower, eps_den_);
  }

  void sweep(double tol) {
    for (const auto& [origin, ods] : by_origin_) {
      (void)origin;
      for (int w : ods) equilibrate_od(w, tol);
    }
  }

  void equilibrate_od(int w, double tol) {
    auto& routes = state_.paths.per_od[w];
    auto& flows = state_.h[w];
    if (routes.size() < 2) return;
    const double od_tol = 0.25 * tol * std::max(std::abs(pi_[w]), 1e-12);

    for (int round = 0; round < 40; ++round) {
      int lo = -1, hi = -1;
      double lo_cost = kInf, hi_cost = -kInf;
      for (size_t r = 0; r < routes.size(); ++r) {
        double c = route_cost(routes[r]);
        if (c < lo_cost) {
          lo_cost = c;
          lo = static_cast<int>(r);
        }
        if (flows[r] > 0.0 && c > hi_cost) {
          hi_cost = c;
          hi = static_cast<int>(r);
        }
      }
      if (lo < 0 || hi < 0 || lo == hi) return;
      double spread = hi_cost - lo_cost;
      if (spread <= od_tol) return;
      if (!shift_flow(w, hi, lo, spread)) return;
    }
  }

  double route_cost(const Route& route) const {
    double c = 0.0;
    for (int a : route.links) c += model_.cost(a, state_.v[a]);
    return c;
  }

  // Newton shift of flow from route `hi` to route `lo`, clamped and backtracked
  // so the separable potential cannot increase.
  bool shift_flow(int w, int hi, int lo, double spread) {
    const Route& from = state_.paths.per_od[w][hi];
    const Route& to = state_.paths.per_od[w][lo];
    touched_.clear();
    for (int a : from.links) {
      if (diff_[a] == 0) touched_.push_back(a);
      diff_[a] -= 1;
    }
    for (int a : to.links) {
      if (diff_[a] == 0) touched_.push_back(a);
      diff_[a] += 1;
    }

    double denom = 0.0;
    for (int a : touched_)
      if (diff_[a] != 0) denom += model_.cost_dv(a, state_.v[a]);
    double h_max = state_.h[w][hi];
    double delta = denom > 0.0 ? spread / denom : h_max;
    delta = std::min(delta, h_max);

    bool applied = false;
    for (int tries = 0; tries < 60 && delta > 0.0; ++tries) {
      double dpot = 0.0;
      double scale = 1.0;
      for (int a : touched_) {
        if (diff_[a] == 0) continue;
        double before = model_.potential(a, state_.v[a]);
        double after = model_.potential(a, state_.v[a] + diff_[a] * delta);
        dpot += after - before;
        scale = std::max(scale, std::abs(before));
      }
      if (dpot <= 1e-13 * scale) {
        state_.h[w][hi] -= delta;
        state_.h[w][lo] += delta;
        if (state_.h[w][hi] < 0.0) state_.h[w][hi] = 0.0;
        for (int a : touched_)
          if (diff_[a] != 0) state_.v[a] = std::max(0.0, state_.v[a] + diff_[a] * delta);
        applied = true;
        break;
      }
      delta *= 0.5;
    }

    for (int a : touched_) diff_[a] = 0;
    return applied;
  }

  double potential_value(std::span<const double> v) const {
    double p = 0.0;
    for (int a = 0; a < net_.num_links(); ++a) p += model_.potential(a, v[a]);
    return p;
  }

  const Network& net_;
  const DemandTable& demand_;
  const LinkCostModel& model_;
  FlowState state_;
  std::map<int, std::vector<int>> by_origin_;
  std::vector<std::map<std::vector<int>, int>> route_index_;
  std::vector<double> pi_;
  std::vector<int8_t> diff_;
  std::vector<int> touched_;
  double eps_den_ = 0.0;
  bool certifiable_pass_ = true;
};

}  // namespace

AssignResult solve_assignment(const Network& net, const DemandTable& demand,
                              const LinkCostModel& model, const AssignOptions& opts,
                              const FlowState* warm) {
  if (!(opts.tol > 0.0)) throw ValidationError("assignment tolerance must be positive");
  Equilibrator solver(net, demand, model);
  return solver.run(opts, warm);
}

AssignResult solve_ue(const Network& net, const DemandTable& demand, std::span<const double> y,
                      double tol, const FlowState* warm, int max_iters) {
  UeCostModel model(net, y);
  return solve_assignment(net, demand, model, {tol, max_iters}, warm);
}

AssignResult solve_so_assignment(const Network& net, const DemandTable& demand,
                                 std::span<const double> y, double tol, const FlowState* warm,
                                 int max_iters) {
  SoCostModel model(net, y);
  return solve_assignment(net, demand, model, {tol, max_iters}, warm);
}

AssignResult solve_inner_v(const Network& net, const DemandTable& demand,
                           const InnerObjectiveParams& params, std::span<const double> y_fixed,
                           double tol, const FlowState* warm, int max_iters) {
  InnerCostModel model(net, params, y_fixed);
  return solve_assignment(net, demand, model, {tol, max_iters}, warm);
}

}  // namespace capex
