#include "capex/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "capex/cardstep.hpp"
#include "capex/costs.hpp"

namespace capex {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double support_tol(const Network& net) {
  double max_cap = 0.0;
  for (const Link& l : net.links()) max_cap = std::max(max_cap, l.cap);
  return 1e-6 * max_cap;
}

std::vector<int> support_1based(const Network& net, std::span<const double> y) {
  std::vector<int> s;
  double zt = support_tol(net);
  for (int a = 0; a < net.num_links(); ++a)
    if (y[a] > zt) s.push_back(a + 1);
  return s;
}

json instance_json(const RunConfig& c) {
  json j;
  if (!c.instance.empty()) {
    j["name"] = c.instance;
    if (c.scale_b_offbenchmark != 1.0) j["scale_b_offbenchmark"] = c.scale_b_offbenchmark;
  } else {
    j["net"] = c.net_path;
    j["trips"] = c.trips_path;
    if (!c.expansion_path.empty()) j["expansion"] = c.expansion_path;
    j["default_bcoef"] = c.default_bcoef;
  }
  return j;
}

json config_json(const RunConfig& c) {
  json j;
  j["method"] = c.method;
  j["tau"] = c.pdc.tau;
  j["eta"] = c.pdc.eta;
  if (c.method == "pdc") {
    j["eps1"] = c.pdc.eps1;
    j["eps2"] = c.pdc.eps2;
    j["eps3"] = c.pdc.eps3;
    j["rho0"] = c.pdc.rho0;
    j["sigma"] = c.pdc.sigma;
    j["theta_l"] = c.pdc.theta_l;
    j["theta_u"] = c.pdc.theta_u;
    j["beta_rule"] = c.pdc.beta_rule == BetaRule::midpoint ? "midpoint" : "sum";
    j["inner_tol"] = c.pdc.inner_tol;
    j["assign_tol"] = c.pdc.assign_tol;
    j["max_outer"] = c.pdc.max_outer;
    j["max_inner"] = c.pdc.max_inner;
  }
  if (c.method == "m2") {
    j["alpha0"] = c.alpha0;
    j["gamma_c"] = c.gamma_c;
    j["gamma_r"] = c.gamma_r;
  }
  if (c.method == "m1") j["fd_step"] = c.fd_step;
  if (c.method == "oracle") j["grid"] = c.oracle_grid;
  j["refs_tol"] = c.refs_tol;
  j["threads"] = c.threads;
  return j;
}

struct MethodOutput {
  json result;
  std::vector<std::pair<double, double>> trajectory;  // (elapsed_s, objective)
  double objective = 0.0;                             // implicit objective of the plan
  bool has_objective = true;
  PdcTrace trace;
  bool has_trace = false;
};

json trace_row_json(const PdcIterate& r) {
  json j;
  j["k"] = r.k;
  j["rho"] = r.rho;
  j["beta"] = r.beta;
  j["y"] = r.y;
  j["v"] = r.v;
  j["g"] = r.g_anchor;
  j["grad_g"] = r.grad_g_anchor;
  j["e1"] = r.e1;
  j["e2"] = r.e2;
  j["e3"] = r.e3;
  j["merit"] = r.merit;
  j["merit_prev"] = r.merit_prev;
  j["F"] = r.objective;
  j["F_star"] = r.objective_star;
  j["phi"] = r.phi_next;
  j["sweeps"] = r.inner_sweeps;
  j["psi"] = r.psi_sweep_values;
  j["elapsed_s"] = r.elapsed_s;
  return j;
}

MethodOutput run_method(const RunConfig& c, const Instance& inst, const ReferencePoints& refs) {
  const Network& net = inst.net;
  const DemandTable& demand = inst.demand;
  MethodOutput out;

  if (c.method == "refs") {
    out.result["f0"] = refs.f0;
    out.result["fso"] = refs.fso;
    out.result["converged"] = refs.converged;
    out.has_objective = false;
  } else if (c.method == "so") {
    out.result["fso"] = refs.fso;
    out.result["f0"] = refs.f0;
    out.result["y"] = refs.y_so;
    out.result["v"] = refs.v_so;
    out.result["converged"] = refs.converged;
    out.has_objective = false;
  } else if (c.method == "pdc") {
    std::vector<double> y0 = c.y0;
    if (y0.empty()) y0.assign(net.num_links(), 0.0);
    if (static_cast<int>(y0.size()) != net.num_links())
      throw ValidationError("starting plan has the wrong length");
    PdcResult res = pdc_solve(net, demand, c.pdc, y0);
    out.objective = designer_objective(net, res.y, res.v_star, c.pdc.eta);
    out.result["y"] = res.y;
    out.result["support"] = support_1based(net, res.y);
    out.result["v"] = res.flow.v;
    out.result["v_star"] = res.v_star;
    out.result["F"] = out.objective;
    out.result["F_iterate"] =
        designer_objective(net, res.y, std::span<const double>(res.trace.v_final), c.pdc.eta);
    out.result["relative"] = relative_scale(out.objective, refs);
    json cert;
    cert["converged"] = res.certificate.converged;
    cert["e1"] = res.certificate.e1;
    cert["e2"] = res.certificate.e2;
    cert["e3"] = res.certificate.e3;
    cert["rho"] = res.certificate.rho_final;
    cert["phi"] = res.certificate.phi_final;
    cert["outer_iters"] = res.certificate.outer_iters;
    out.result["certificate"] = cert;
    for (const PdcIterate& r : res.trace.rows) {
      if (out.trajectory.empty() || r.objective_star < out.trajectory.back().second)
        out.trajectory.emplace_back(r.elapsed_s, r.objective_star);
    }
    out.trace = std::move(res.trace);
    out.has_trace = true;
  } else if (c.method == "m1") {
    M1Result res = run_m1(net, demand, c.pdc.eta, c.pdc.tau, c.method_tol);
    out.objective = res.objective;
    out.result["y"] = res.y;
    json supp = json::array();
    for (int a : res.support) supp.push_back(a + 1);
    out.result["support"] = supp;
    out.result["F"] = res.objective;
    out.result["relative"] = relative_scale(res.objective, refs);
    out.trajectory = res.trajectory.points;
  } else if (c.method == "m2") {
    M2Result res =
        run_m2(net, demand, c.pdc.eta, c.pdc.tau, c.alpha0, c.gamma_c, c.gamma_r, c.method_tol);
    if (!res.ok) throw SolveError("l1 search failed to reach the required sparsity");
    out.objective = res.objective;
    out.result["y"] = res.y;
    json supp = json::array();
    for (int a : res.support) supp.push_back(a + 1);
    out.result["support"] = supp;
    out.result["F"] = res.objective;
    out.result["relative"] = relative_scale(res.objective, refs);
    out.result["accepted_alpha"] = res.accepted_alpha;
    json log = json::array();
    for (const AlphaStep& s : res.log)
      log.push_back({{"alpha", s.alpha}, {"support_size", s.support_size}, {"accepted", s.accepted}});
    out.result["alpha_search"] = log;
    out.trajectory = res.trajectory.points;
  } else if (c.method == "oracle") {
    OracleResult res =
        brute_force_ccbcep(net, demand, c.pdc.eta, c.pdc.tau, c.oracle_grid, c.method_tol);
    out.objective = res.objective;
    out.result["y"] = res.y;
    json supp = json::array();
    for (int a : res.support) supp.push_back(a + 1);
    out.result["support"] = supp;
    out.result["F"] = res.objective;
    out.result["relative"] = relative_scale(res.objective, refs);
    out.trajectory = res.trajectory.points;
  } else {
    throw ValidationError("unknown method '" + c.method + "'");
  }
  return out;
}

void write_trace_csv(const std::string& path, const Network& net, const PdcTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open trace file " + path);
  out << std::setprecision(12);
  out << "k,rho,beta,e1,e2,e3,merit,F,supp_size,elapsed_s\n";
  double zt = support_tol(net);
  for (size_t i = 0; i < trace.rows.size(); ++i) {
    const PdcIterate& r = trace.rows[i];
    const std::vector<double>& y_next =
        i + 1 < trace.rows.size() ? trace.rows[i + 1].y : trace.y_final;
    int supp = 0;
    for (double v : y_next)
      if (v > zt) ++supp;
    out << r.k << "," << r.rho << "," << r.beta << "," << r.e1 << "," << r.e2 << "," << r.e3
        << "," << r.merit << "," << r.objective << "," << supp << "," << r.elapsed_s << "\n";
  }
}

}  // namespace

Instance load_instance(const RunConfig& c) {
  bool builtin = !c.instance.empty();
  bool files = !c.net_path.empty() || !c.trips_path.empty();
  if (builtin == files)
    throw ValidationError("specify exactly one instance source (builtin name or net/trips files)");
  Instance inst;
  if (builtin) {
    inst = builtin_instance(c.instance);
    if (c.scale_b_offbenchmark != 1.0) {
      if (c.instance != "sioux_falls")
        throw ValidationError("--scale-b-offbenchmark applies to the sioux_falls instance");
      scale_offbenchmark_bcoef(inst.net, c.scale_b_offbenchmark);
    }
  } else {
    if (c.net_path.empty() || c.trips_path.empty())
      throw ValidationError("file instances need both --net and --trips");
    std::ifstream net_in(c.net_path);
    if (!net_in) throw ValidationError("cannot open net file " + c.net_path);
    inst.net = parse_net(net_in);
    apply_expansion_defaults(inst.net, c.default_bcoef);
    if (!c.expansion_path.empty()) {
      std::ifstream exp_in(c.expansion_path);
      if (!exp_in) throw ValidationError("cannot open expansion file " + c.expansion_path);
      apply_expansion_sidecar(inst.net, exp_in);
    }
    std::ifstream trips_in(c.trips_path);
    if (!trips_in) throw ValidationError("cannot open trips file " + c.trips_path);
    inst.demand = parse_trips(trips_in, inst.net.num_nodes());
    validate_connectivity(inst.net, inst.demand);
  }
  if (c.threads < 1) throw ValidationError("--threads must be at least 1");
  return inst;
}

int run(const RunConfig& config, std::ostream& log) {
  try {
    const auto t0 = Clock::now();
    Instance inst = load_instance(config);
    ReferencePoints refs = compute_references(inst.net, inst.demand, config.pdc.eta,
                                              config.refs_tol);
    MethodOutput out = run_method(config, inst, refs);
    double wall = seconds_since(t0);

    json doc;
    doc["schema"] = 1;
    doc["instance"] = instance_json(config);
    doc["method"] = config.method;
    doc["config"] = config_json(config);
    doc["references"] = {{"f0", refs.f0}, {"fso", refs.fso}};
    doc["result"] = out.result;
    if (out.has_trace) {
      json rows = json::array();
      for (const PdcIterate& r : out.trace.rows) rows.push_back(trace_row_json(r));
      doc["trace"] = rows;
      doc["y_final"] = out.trace.y_final;
      doc["v_final"] = out.trace.v_final;
    }
    doc["wall_s"] = wall;

    if (!config.out_json.empty()) {
      std::ofstream jout(config.out_json);
      if (!jout) throw ValidationError("cannot open output file " + config.out_json);
      jout << doc.dump(1) << "\n";
    }
    if (!config.out_trace.empty()) {
      if (!out.has_trace)
        throw ValidationError("--out-trace applies to the pdc method");
      write_trace_csv(config.out_trace, inst.net, out.trace);
    }

    log << "method: " << config.method << "\n";
    log << "f0: " << refs.f0 << "  fso: " << refs.fso << "\n";
    if (out.has_objective) {
      log << "objective: " << out.objective
          << "  relative: " << relative_scale(out.objective, refs) << "\n";
      if (out.result.contains("support")) log << "support: " << out.result["support"].dump() << "\n";
    }
    log << "wall_s: " << wall << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int compare(const RunConfig& base, const std::vector<std::string>& methods,
            const std::string& out_csv, const std::string& out_trajectory, std::ostream& log) {
  try {
    Instance inst = load_instance(base);
    ReferencePoints refs =
        compute_references(inst.net, inst.demand, base.pdc.eta, base.refs_tol);

    std::ostringstream csv, traj;
    csv << std::setprecision(12) << "method,relative,time_s\n";
    traj << std::setprecision(12) << "method,elapsed_s,relative\n";
    for (const std::string& m : methods) {
      RunConfig c = base;
      c.method = m;
      const auto t0 = Clock::now();
      MethodOutput out = run_method(c, inst, refs);
      double wall = seconds_since(t0);
      double rel = out.has_objective ? relative_scale(out.objective, refs) : 0.0;
      csv << m << "," << rel << "," << wall << "\n";
      for (const auto& [t, f] : out.trajectory)
        traj << m << "," << t << "," << relative_scale(f, refs) << "\n";
      log << m << ": relative " << rel << " in " << wall << " s\n";
    }
    if (!out_csv.empty()) {
      std::ofstream f(out_csv);
      if (!f) throw ValidationError("cannot open " + out_csv);
      f << csv.str();
    }
    if (!out_trajectory.empty()) {
      std::ofstream f(out_trajectory);
      if (!f) throw ValidationError("cannot open " + out_trajectory);
      f << traj.str();
    }
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int verify_trace(const std::string& json_path, std::ostream& log, double rel_tol) {
  try {
    std::ifstream in(json_path);
    if (!in) throw ValidationError("cannot open " + json_path);
    json doc = json::parse(in);
    if (!doc.contains("trace")) throw ValidationError("result file carries no trace");

    RunConfig rc;
    const json& ij = doc["instance"];
    if (ij.contains("name")) {
      rc.instance = ij["name"].get<std::string>();
      if (ij.contains("scale_b_offbenchmark"))
        rc.scale_b_offbenchmark = ij["scale_b_offbenchmark"].get<double>();
    } else {
      rc.net_path = ij["net"].get<std::string>();
      rc.trips_path = ij["trips"].get<std::string>();
      if (ij.contains("expansion")) rc.expansion_path = ij["expansion"].get<std::string>();
      if (ij.contains("default_bcoef")) rc.default_bcoef = ij["default_bcoef"].get<double>();
    }
    Instance inst = load_instance(rc);

    const json& rows = doc["trace"];
    std::vector<double> y_final = doc["y_final"].get<std::vector<double>>();
    std::vector<double> v_final = doc["v_final"].get<std::vector<double>>();

    int checked = 0;
    double worst = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const json& r = rows[i];
      std::vector<double> y = r["y"].get<std::vector<double>>();
      std::vector<double> v = r["v"].get<std::vector<double>>();
      std::vector<double> grad = r["grad_g"].get<std::vector<double>>();
      double g = r["g"].get<double>();
      const std::vector<double> y_next =
          i + 1 < rows.size() ? rows[i + 1]["y"].get<std::vector<double>>() : y_final;
      const std::vector<double> v_next =
          i + 1 < rows.size() ? rows[i + 1]["v"].get<std::vector<double>>() : v_final;

      double e1 = 0.0, e2 = 0.0, lin = g;
      for (size_t a = 0; a < y.size(); ++a) {
        double dy = y_next[a] - y[a];
        double dv = v_next[a] - v[a];
        e1 += dy * dy;
        e2 += dv * dv;
        lin += grad[a] * dy;
      }
      e1 = std::sqrt(e1);
      e2 = std::sqrt(e2);
      double e3 = beckmann_potential(inst.net, y_next, v_next) - lin;

      auto rel_err = [](double got, double want) {
        return std::abs(got - want) / std::max(std::abs(want), 1e-12);
      };
      double err = std::max({rel_err(e1, r["e1"].get<double>()),
                             rel_err(e2, r["e2"].get<double>()),
                             rel_err(e3, r["e3"].get<double>())});
      worst = std::max(worst, err);
      ++checked;
      if (err > rel_tol) {
        log << "row " << i << ": metric mismatch, relative error " << err << "\n";
        return 1;
      }
    }
    log << "verified " << checked << " trace rows, worst relative error " << worst << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace capex
