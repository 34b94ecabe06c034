#pragma once

#include <memory>
#include <span>
#include <vector>

#include "capex/costs.hpp"
#include "capex/network.hpp"

namespace capex {

/// Strictly increasing marginal link cost with analytic flow derivative and
/// antiderivative (the separable potential the assignment minimizes).
class LinkCostModel {
 public:
  virtual ~LinkCostModel() = default;
  virtual double cost(int link, double v) const = 0;
  virtual double cost_dv(int link, double v) const = 0;
  virtual double potential(int link, double v) const = 0;
};

/// Equilibrium assignment: cost = BPR time at fixed added capacity.
class UeCostModel final : public LinkCostModel {
 public:
  UeCostModel(const Network& net, std::span<const double> y);
  double cost(int link, double v) const override;
  double cost_dv(int link, double v) const override;
  double potential(int link, double v) const override;

 private:
  const Network* net_;
  std::vector<double> y_;
};

/// System-optimal assignment: cost = marginal total time t + v * dt/dv.
class SoCostModel final : public LinkCostModel {
 public:
  SoCostModel(const Network& net, std::span<const double> y);
  double cost(int link, double v) const override;
  double cost_dv(int link, double v) const override;
  double potential(int link, double v) const override;

 private:
  const Network* net_;
  std::vector<double> y_;
};

/// Flow block of the linearized subproblem: cost = assignment_cost at fixed y.
class InnerCostModel final : public LinkCostModel {
 public:
  InnerCostModel(const Network& net, const InnerObjectiveParams& params,
                 std::span<const double> y);
  double cost(int link, double v) const override;
  double cost_dv(int link, double v) const override;
  double potential(int link, double v) const override;

 private:
  const Network* net_;
  const InnerObjectiveParams* params_;
  std::vector<double> y_;
};

/// Route flows over a working path set plus the induced link flows.
struct FlowState {
  PathSet paths;
  std::vector<std::vector<double>> h;  // route flows, parallel to paths.per_od
  std::vector<double> v;               // link flows, kept equal to the incidence product

  void rebuild_link_flows(const Network& net);
  bool empty() const { return paths.per_od.empty(); }
};

struct AssignOptions {
  double tol = 1e-8;   // certified relative gap
  int max_iters = 500; // equilibration sweeps
};

struct AssignResult {
  FlowState flow;
  double rel_gap = 0.0;
  int iters = 0;
  double potential_value = 0.0;  // achieved separable potential
  bool converged = false;
};

/// Path-based Newton equilibration with column generation. Minimizes the
/// separable potential of `model` over the flow polytope to a certified
/// relative gap.
AssignResult solve_assignment(const Network& net, const DemandTable& demand,
                              const LinkCostModel& model, const AssignOptions& opts,
                              const FlowState* warm = nullptr);

AssignResult solve_ue(const Network& net, const DemandTable& demand, std::span<const double> y,
                      double tol, const FlowState* warm = nullptr, int max_iters = 500);

AssignResult solve_so_assignment(const Network& net, const DemandTable& demand,
                                 std::span<const double> y, double tol,
                                 const FlowState* warm = nullptr, int max_iters = 500);

AssignResult solve_inner_v(const Network& net, const DemandTable& demand,
                           const InnerObjectiveParams& params, std::span<const double> y_fixed,
                           double tol, const FlowState* warm = nullptr, int max_iters = 500);

}  // namespace capex
