#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "capex/cli.hpp"

using namespace capex;
using json = nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Timing fields are the only run-to-run nondeterminism; zero them before
// comparing results byte for byte.
std::string normalized(const std::string& path) {
  json doc = json::parse(slurp(path));
  doc["wall_s"] = 0.0;
  if (doc.contains("trace"))
    for (auto& row : doc["trace"]) row["elapsed_s"] = 0.0;
  return doc.dump(1);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& p) : path(p) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("instance loading validation") {
  RunConfig none;
  none.instance = "";
  CHECK_THROWS_AS(load_instance(none), ValidationError);

  RunConfig both;
  both.instance = "hearn";
  both.net_path = "x.tntp";
  CHECK_THROWS_AS(load_instance(both), ValidationError);

  RunConfig scale;
  scale.instance = "hearn";
  scale.scale_b_offbenchmark = 2.0;
  CHECK_THROWS_AS(load_instance(scale), ValidationError);

  RunConfig missing;
  missing.net_path = "/nonexistent.tntp";
  missing.trips_path = "/nonexistent_trips.tntp";
  CHECK_THROWS_AS(load_instance(missing), ValidationError);

  RunConfig ok;
  ok.instance = "hearn";
  Instance inst = load_instance(ok);
  CHECK(inst.net.num_links() == 18);
}

TEST_CASE("reference run writes a result file") {
  TempFile out("/tmp/capex_refs_test.json");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "refs";
  cfg.out_json = out.path;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == 0);
  json doc = json::parse(slurp(out.path));
  CHECK(doc["schema"] == 1);
  CHECK(doc["result"]["f0"].get<double>() == doctest::Approx(245.6).epsilon(0.01));
  CHECK(doc["references"]["f0"] == doc["result"]["f0"]);
}

TEST_CASE("zero-budget run reports the status quo") {
  TempFile out("/tmp/capex_tau0_test.json");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "pdc";
  cfg.pdc.tau = 0;
  cfg.pdc.eta = 1.0;
  cfg.pdc.theta_l = 10.0;
  cfg.pdc.theta_u = 20.0;
  cfg.out_json = out.path;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == 0);
  json doc = json::parse(slurp(out.path));
  CHECK(doc["result"]["support"].empty());
  CHECK(doc["result"]["relative"].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
  for (double y : doc["result"]["y"].get<std::vector<double>>()) CHECK(y == 0.0);
}

TEST_CASE("identical configurations produce identical results") {
  TempFile a("/tmp/capex_det_a.json"), b("/tmp/capex_det_b.json");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "pdc";
  cfg.pdc.tau = 2;
  cfg.pdc.eta = 1.0;
  cfg.pdc.theta_l = 10.0;
  cfg.pdc.theta_u = 20.0;
  cfg.pdc.max_outer = 12;
  std::ostringstream log;
  cfg.out_json = a.path;
  REQUIRE(run(cfg, log) == 0);
  cfg.out_json = b.path;
  REQUIRE(run(cfg, log) == 0);
  CHECK(normalized(a.path) == normalized(b.path));
}

TEST_CASE("trace files verify and round trip") {
  TempFile out("/tmp/capex_trace_test.json");
  TempFile csv("/tmp/capex_trace_test.csv");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "pdc";
  cfg.pdc.tau = 2;
  cfg.pdc.eta = 1.0;
  cfg.pdc.theta_l = 10.0;
  cfg.pdc.theta_u = 20.0;
  cfg.pdc.max_outer = 15;
  cfg.out_json = out.path;
  cfg.out_trace = csv.path;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == 0);

  std::ostringstream vlog;
  CHECK(verify_trace(out.path, vlog) == 0);

  std::string header;
  std::ifstream trace(csv.path);
  std::getline(trace, header);
  CHECK(header == "k,rho,beta,e1,e2,e3,merit,F,supp_size,elapsed_s");
  int rows = 0;
  std::string line;
  while (std::getline(trace, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 15);
}

TEST_CASE("tampered traces are rejected") {
  TempFile out("/tmp/capex_tamper_test.json");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "pdc";
  cfg.pdc.tau = 1;
  cfg.pdc.eta = 1.0;
  cfg.pdc.theta_l = 10.0;
  cfg.pdc.theta_u = 20.0;
  cfg.pdc.max_outer = 6;
  cfg.out_json = out.path;
  std::ostringstream log;
  REQUIRE(run(cfg, log) == 0);

  json doc = json::parse(slurp(out.path));
  doc["trace"][2]["e3"] = doc["trace"][2]["e3"].get<double>() * 1.5 + 1.0;
  {
    std::ofstream rewrite(out.path);
    rewrite << doc.dump(1) << "\n";
  }
  std::ostringstream vlog;
  CHECK(verify_trace(out.path, vlog) != 0);
}

TEST_CASE("compare emits one row per method") {
  TempFile csv("/tmp/capex_cmp_test.csv");
  TempFile traj("/tmp/capex_cmp_traj.csv");
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.pdc.tau = 2;
  cfg.pdc.eta = 1.0;
  cfg.pdc.theta_l = 10.0;
  cfg.pdc.theta_u = 20.0;
  std::ostringstream log;
  REQUIRE(compare(cfg, {"m1", "refs"}, csv.path, traj.path, log) == 0);

  std::ifstream in(csv.path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,relative,time_s");
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].substr(0, 3) == "m1,");
  CHECK(rows[1].substr(0, 5) == "refs,");

  std::ifstream tin(traj.path);
  std::getline(tin, header);
  CHECK(header == "method,elapsed_s,relative");
}

TEST_CASE("unknown method fails cleanly") {
  RunConfig cfg;
  cfg.instance = "hearn";
  cfg.method = "annealing";
  std::ostringstream log;
  CHECK(run(cfg, log) == 1);
  CHECK(log.str().find("error") != std::string::npos);
}
