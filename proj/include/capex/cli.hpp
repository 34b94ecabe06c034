#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "capex/baselines.hpp"
#include "capex/instances.hpp"
#include "capex/pdc.hpp"

namespace capex {

struct RunConfig {
  // Instance source: exactly one of a builtin name or a net/trips file pair.
  std::string instance;
  std::string net_path, trips_path, expansion_path;
  double default_bcoef = 1.0;
  double scale_b_offbenchmark = 1.0;  // bcoef multiplier outside the benchmark set

  std::string method = "pdc";  // pdc | m1 | m2 | oracle | refs | so
  PdcConfig pdc;
  std::vector<double> y0;      // optional starting plan for pdc

  double alpha0 = 0.1, gamma_c = 2.0, gamma_r = 0.95;
  double fd_step = 1e-4;
  int oracle_grid = 25;
  double refs_tol = 1e-8;
  double method_tol = 1e-6;    // argument tolerance of the baseline descents
  int threads = 1;

  std::string out_json, out_trace;
};

Instance load_instance(const RunConfig& config);

/// Executes one method; writes the result JSON and trace CSV when requested
/// and prints a summary. Returns a process exit status.
int run(const RunConfig& config, std::ostream& log);

/// Runs several methods on one instance; writes a combined CSV of
/// (method, relative objective, time) plus a best-so-far trajectory CSV.
int compare(const RunConfig& base, const std::vector<std::string>& methods,
            const std::string& out_csv, const std::string& out_trajectory, std::ostream& log);

/// Recomputes the error metrics of a stored trace from its logged iterates.
int verify_trace(const std::string& json_path, std::ostream& log, double rel_tol = 1e-9);

}  // namespace capex
