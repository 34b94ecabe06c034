#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capex/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, capex::RunConfig& config) {
  cmd->add_option("--instance", config.instance, "builtin instance: hearn | sioux_falls");
  cmd->add_option("--net", config.net_path, "TNTP net file");
  cmd->add_option("--trips", config.trips_path, "TNTP trips file");
  cmd->add_option("--expansion", config.expansion_path,
                  "expansion sidecar (rows: link_id umax bcoef)");
  cmd->add_option("--default-bcoef", config.default_bcoef,
                  "expansion coefficient for links missing from the sidecar");
  cmd->add_option("--scale-b-offbenchmark", config.scale_b_offbenchmark,
                  "multiply bcoef outside the sioux_falls benchmark set");
  cmd->add_option("--tau", config.pdc.tau, "maximum number of expanded links");
  cmd->add_option("--eta", config.pdc.eta, "expansion cost weight");
  cmd->add_option("--rho0", config.pdc.rho0, "initial penalty");
  cmd->add_option("--sigma", config.pdc.sigma, "penalty growth factor");
  cmd->add_option("--theta-l", config.pdc.theta_l, "lower bound on rho*beta");
  cmd->add_option("--theta-u", config.pdc.theta_u, "upper bound on rho*beta");
  cmd->add_option("--beta-rule", [&config](const std::vector<std::string>& vals) {
        if (vals.empty()) return false;
        if (vals[0] == "midpoint") config.pdc.beta_rule = capex::BetaRule::midpoint;
        else if (vals[0] == "sum")
          config.pdc.beta_rule = capex::BetaRule::sum;
        else return false;
        return true;
      }, "beta selection rule: midpoint | sum");
  cmd->add_option("--eps1", config.pdc.eps1, "tolerance on the plan change");
  cmd->add_option("--eps2", config.pdc.eps2, "tolerance on the flow change");
  cmd->add_option("--eps3", config.pdc.eps3, "tolerance on the linearized gap");
  cmd->add_option("--inner-tol", config.pdc.inner_tol, "alternation fixed-point tolerance");
  cmd->add_option("--assign-tol", config.pdc.assign_tol, "inner assignment relative gap");
  cmd->add_option("--max-outer", config.pdc.max_outer, "outer iteration cap");
  cmd->add_option("--max-inner", config.pdc.max_inner, "alternation sweep cap");
  cmd->add_option("--alpha0", config.alpha0, "initial l1 weight (m2)");
  cmd->add_option("--gamma-c", config.gamma_c, "coarse alpha growth factor (m2)");
  cmd->add_option("--gamma-r", config.gamma_r, "refinement alpha factor (m2)");
  cmd->add_option("--fd-step", config.fd_step, "sensitivity step relative to capacity (m1)");
  cmd->add_option("--grid", config.oracle_grid, "grid points per axis (oracle)");
  cmd->add_option("--refs-tol", config.refs_tol, "tolerance of the reference solves");
  cmd->add_option("--tol", config.method_tol, "argument tolerance of baseline descents");
  cmd->add_option("--threads", config.threads, "worker threads (the solver is sequential)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver toolkit for cardinality-constrained capacity expansion on congested networks"};
  app.require_subcommand(1);

  capex::RunConfig config;
  double eps_all = 0.0;
  double theorem2_eps = 0.0;

  CLI::App* solve = app.add_subcommand("solve", "run one method on one instance");
  add_common_options(solve, config);
  solve->add_option("--method", config.method, "pdc | m1 | m2 | oracle | refs | so");
  solve->add_option("--eps", eps_all, "set eps1 = eps2 = eps3");
  solve->add_option("--theorem2-eps", theorem2_eps,
                    "derive eps2/eps3 from the KKT calibration for this eps");
  solve->add_option("--out-json", config.out_json, "result file");
  solve->add_option("--out-trace", config.out_trace, "trace CSV (pdc)");

  std::vector<std::string> methods;
  std::string out_csv, out_traj;
  CLI::App* cmp = app.add_subcommand("compare", "run several methods on one instance");
  add_common_options(cmp, config);
  cmp->add_option("--methods", methods, "methods to run")->delimiter(',');
  cmp->add_option("--eps", eps_all, "set eps1 = eps2 = eps3");
  cmp->add_option("--out-csv", out_csv, "combined results CSV");
  cmp->add_option("--out-trajectory", out_traj, "best-so-far trajectory CSV");

  std::string verify_path;
  double verify_tol = 1e-9;
  CLI::App* verify = app.add_subcommand("verify-trace", "recheck a stored trace");
  verify->add_option("--json", verify_path, "result file with a trace")->required();
  verify->add_option("--rel-tol", verify_tol, "allowed relative deviation");

  CLI11_PARSE(app, argc, argv);

  if (eps_all > 0.0) {
    config.pdc.eps1 = eps_all;
    config.pdc.eps2 = eps_all;
    config.pdc.eps3 = eps_all;
  }
  if (theorem2_eps > 0.0) {
    auto [eps2, eps3] = capex::theorem2_tolerances(theorem2_eps, config.pdc.theta_u);
    config.pdc.eps1 = eps2;
    config.pdc.eps2 = eps2;
    config.pdc.eps3 = eps3;
  }

  if (solve->parsed()) return capex::run(config, std::cout);
  if (cmp->parsed()) {
    if (methods.empty()) methods = {"m1", "m2", "pdc"};
    return capex::compare(config, methods, out_csv, out_traj, std::cout);
  }
  if (verify->parsed()) return capex::verify_trace(verify_path, std::cout, verify_tol);
  return 1;
}
