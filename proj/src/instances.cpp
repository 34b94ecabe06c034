#include "capex/instances.hpp"

#include <cstdio>
#include <sstream>

namespace capex {

namespace {

// Nine-node network: origins 1-2, destinations 3-4, links in lexicographic
// (tail, head) order. Capacities and demands are one tenth of the classic
// toll-pricing instance.
struct HearnRow {
  int tail, head;
  double t0, cap, bcoef;
};
constexpr HearnRow kHearnLinks[18] = {
    {1, 5, 5.0, 1.2, 5.0},    {1, 6, 6.0, 1.8, 18.0},  {2, 5, 3.0, 3.5, 9.0},
    {2, 6, 9.0, 3.5, 9.0},    {5, 6, 9.0, 2.0, 18.0},  {5, 7, 2.0, 1.1, 2.0},
    {5, 9, 8.0, 2.6, 24.0},   {6, 5, 2.67, 1.1, 5.33}, {6, 8, 6.0, 3.3, 6.0},
    {6, 9, 7.0, 3.2, 21.0},   {7, 3, 3.0, 2.5, 3.0},   {7, 4, 6.0, 2.4, 18.0},
    {7, 8, 2.0, 1.9, 4.0},    {8, 3, 8.0, 3.9, 24.0},  {8, 4, 6.0, 4.3, 6.0},
    {8, 7, 4.0, 3.6, 8.0},    {9, 7, 4.0, 2.6, 12.0},  {9, 8, 8.0, 3.0, 24.0},
};

struct SfRow {
  int tail, head;
  double cap, len;
};
constexpr SfRow kSfLinks[76] = {
    {1, 2, 25900.20064, 6},  {1, 3, 23403.47319, 4},  {2, 1, 25900.20064, 6},
    {2, 6, 4958.180928, 5},  {3, 1, 23403.47319, 4},  {3, 4, 17110.52372, 4},
    {3, 12, 23403.47319, 4}, {4, 3, 17110.52372, 4},  {4, 5, 17782.7941, 2},
    {4, 11, 4908.82673, 6},  {5, 4, 17782.7941, 2},   {5, 6, 4947.995469, 4},
    {5, 9, 10000.0, 5},      {6, 2, 4958.180928, 5},  {6, 5, 4947.995469, 4},
    {6, 8, 4898.587646, 2},  {7, 8, 7841.81131, 3},   {7, 18, 23403.47319, 2},
    {8, 6, 4898.587646, 2},  {8, 7, 7841.81131, 3},   {8, 9, 5050.193156, 10},
    {8, 16, 5045.822583, 5}, {9, 5, 10000.0, 5},      {9, 8, 5050.193156, 10},
    {9, 10, 13915.78842, 3}, {10, 9, 13915.78842, 3}, {10, 11, 10000.0, 5},
    {10, 15, 13512.00155, 6},{10, 16, 4854.917717, 4},{10, 17, 4993.510694, 8},
    {11, 4, 4908.82673, 6},  {11, 10, 10000.0, 5},    {11, 12, 4908.82673, 6},
    {11, 14, 4876.508287, 4},{12, 3, 23403.47319, 4}, {12, 11, 4908.82673, 6},
    {12, 13, 25900.20064, 3},{13, 12, 25900.20064, 3},{13, 24, 5091.256152, 4},
    {14, 11, 4876.508287, 4},{14, 15, 5127.526119, 5},{14, 23, 4924.790605, 4},
    {15, 10, 13512.00155, 6},{15, 14, 5127.526119, 5},{15, 19, 14564.75315, 3},
    {15, 22, 9599.180565, 3},{16, 8, 5045.822583, 5}, {16, 10, 4854.917717, 4},
    {16, 17, 5229.910063, 2},{16, 18, 19679.89671, 3},{17, 10, 4993.510694, 8},
    {17, 16, 5229.910063, 2},{17, 19, 4823.950831, 2},{18, 7, 23403.47319, 2},
    {18, 16, 19679.89671, 3},{18, 20, 23403.47319, 4},{19, 15, 14564.75315, 3},
    {19, 17, 4823.950831, 2},{19, 20, 5002.607563, 4},{20, 18, 23403.47319, 4},
    {20, 19, 5002.607563, 4},{20, 21, 5059.91234, 6}, {20, 22, 5075.697193, 5},
    {21, 20, 5059.91234, 6}, {21, 22, 5229.910063, 2},{21, 24, 4885.357564, 3},
    {22, 15, 9599.180565, 3},{22, 20, 5075.697193, 5},{22, 21, 5229.910063, 2},
    {22, 23, 5000.0, 4},     {23, 14, 4924.790605, 4},{23, 22, 5000.0, 4},
    {23, 24, 5078.508436, 2},{24, 13, 5091.256152, 4},{24, 21, 4885.357564, 3},
    {24, 23, 5078.508436, 2},
};

// Expansion cost coefficients; the ten classic improvement links keep their
// benchmark values, all others are five times the link length.
constexpr double kSfBcoef[76] = {
    30, 20, 30, 25, 20, 20, 20, 20, 10, 30, 10, 20, 25, 25, 20, 26, 40, 10, 26, 40,
    50, 25, 25, 50, 25, 25, 25, 30, 48, 40, 30, 25, 30, 20, 20, 30, 15, 15, 34, 20,
    25, 20, 30, 25, 15, 15, 25, 48, 10, 15, 40, 10, 10, 10, 15, 20, 15, 10, 20, 20,
    20, 30, 25, 30, 10, 15, 15, 25, 10, 20, 20, 20, 10, 34, 15, 10,
};

// OD matrix in vehicles, row = origin.
constexpr int kSfOd[24][24] = {
    {0, 100, 100, 500, 200, 300, 500, 800, 500, 1300, 500, 200, 500, 300, 500, 500, 400, 100, 300, 300, 100, 400, 300, 100},
    {100, 0, 100, 200, 100, 400, 200, 400, 200, 600, 200, 100, 300, 100, 100, 400, 200, 0, 100, 100, 0, 100, 0, 0},
    {100, 100, 0, 200, 100, 300, 100, 200, 100, 300, 300, 200, 100, 100, 100, 200, 100, 0, 0, 0, 0, 100, 100, 0},
    {500, 200, 200, 0, 500, 400, 400, 700, 700, 1200, 1400, 600, 600, 500, 500, 800, 500, 100, 200, 300, 200, 400, 500, 200},
    {200, 100, 100, 500, 0, 200, 200, 500, 800, 1000, 500, 200, 200, 100, 200, 500, 200, 0, 100, 100, 100, 200, 100, 0},
    {300, 400, 300, 400, 200, 0, 400, 800, 400, 800, 400, 200, 200, 100, 200, 900, 500, 100, 200, 300, 100, 200, 100, 100},
    {500, 200, 100, 400, 200, 400, 0, 1000, 600, 1900, 500, 700, 400, 200, 500, 1400, 1000, 200, 400, 500, 200, 500, 200, 100},
    {800, 400, 200, 700, 500, 800, 1000, 0, 800, 1600, 800, 600, 600, 400, 600, 2200, 1400, 300, 700, 900, 400, 500, 300, 200},
    {500, 200, 100, 700, 800, 400, 600, 800, 0, 2800, 1400, 600, 600, 600, 900, 1400, 900, 200, 400, 600, 300, 700, 500, 200},
    {1300, 600, 300, 1200, 1000, 800, 1900, 1600, 2800, 0, 4000, 2000, 1900, 2100, 4000, 4400, 3900, 700, 1800, 2500, 1200, 2600, 1800, 800},
    {500, 200, 300, 1500, 500, 400, 500, 800, 1400, 3900, 0, 1400, 1000, 1600, 1400, 1400, 1000, 100, 400, 600, 400, 1100, 1300, 600},
    {200, 100, 200, 600, 200, 200, 700, 600, 600, 2000, 1400, 0, 1300, 700, 700, 700, 600, 200, 300, 400, 300, 700, 700, 500},
    {500, 300, 100, 600, 200, 200, 400, 600, 600, 1900, 1000, 1300, 0, 600, 700, 600, 500, 100, 300, 600, 600, 1300, 800, 800},
    {300, 100, 100, 500, 100, 100, 200, 400, 600, 2100, 1600, 700, 600, 0, 1300, 700, 700, 100, 300, 500, 400, 1200, 1100, 400},
    {500, 100, 100, 500, 200, 200, 500, 600, 1000, 4000, 1400, 700, 700, 1300, 0, 1200, 1500, 200, 800, 1100, 800, 2600, 1000, 400},
    {500, 400, 200, 800, 500, 900, 1400, 2200, 1400, 4400, 1400, 700, 600, 700, 1200, 0, 2800, 500, 1300, 1600, 600, 1200, 500, 300},
    {400, 200, 100, 500, 200, 500, 1000, 1400, 900, 3900, 1000, 600, 500, 700, 1500, 2800, 0, 600, 1700, 1700, 600, 1700, 600, 300},
    {100, 0, 0, 100, 0, 100, 200, 300, 200, 700, 200, 200, 100, 100, 200, 500, 600, 0, 300, 400, 100, 300, 100, 0},
    {300, 100, 0, 200, 100, 200, 400, 700, 400, 1800, 400, 300, 300, 300, 800, 1300, 1700, 300, 0, 1200, 400, 1200, 300, 100},
    {300, 100, 0, 300, 100, 300, 500, 900, 600, 2500, 600, 500, 600, 500, 1100, 1600, 1700, 400, 1200, 0, 1200, 2400, 700, 400},
    {100, 0, 0, 200, 100, 100, 200, 400, 300, 1200, 400, 300, 600, 400, 800, 600, 600, 100, 400, 1200, 0, 1800, 700, 500},
    {400, 100, 100, 400, 200, 200, 500, 500, 700, 2600, 1100, 700, 1300, 1200, 2600, 1200, 1700, 300, 1200, 2400, 1800, 0, 2100, 1100},
    {300, 0, 100, 500, 100, 100, 200, 300, 500, 1800, 1300, 700, 800, 1100, 1000, 500, 600, 100, 300, 700, 700, 2100, 0, 700},
    {100, 0, 0, 200, 0, 100, 100, 200, 200, 800, 600, 500, 700, 400, 400, 300, 300, 0, 100, 400, 500, 1100, 700, 0},
};

const std::vector<int> kSfBenchmarkLinks = {16, 17, 19, 20, 25, 26, 29, 39, 48, 74};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Instance make_hearn() {
  std::vector<Link> links;
  links.reserve(18);
  for (const HearnRow& r : kHearnLinks) {
    Link a;
    a.tail = r.tail - 1;
    a.head = r.head - 1;
    a.t0 = r.t0;
    a.cap = r.cap;
    a.umax = 10.0 * r.cap;
    a.bcoef = r.bcoef;
    links.push_back(a);
  }
  Instance inst{Network(9, std::move(links)), {}};
  inst.demand.entries = {{0, 2, 1.0}, {0, 3, 2.0}, {1, 2, 3.0}, {1, 3, 4.0}};
  validate_connectivity(inst.net, inst.demand);
  return inst;
}

Instance make_sioux_falls() {
  Network net = parse_net_text(sioux_falls_net_text());
  // Benchmark units: capacities and demands in thousands of vehicles, times in
  // hours (the raw file carries minutes).
  for (int a = 0; a < net.num_links(); ++a) {
    Link& l = net.link(a);
    l.cap /= 1000.0;
    l.t0 /= 60.0;
    l.umax = 10.0 * l.cap;
    l.bcoef = kSfBcoef[a];
  }
  DemandTable demand = parse_trips_text(sioux_falls_trips_text(), net.num_nodes());
  for (OdPair& w : demand.entries) w.demand /= 1000.0;
  validate_connectivity(net, demand);
  return Instance{std::move(net), std::move(demand)};
}

}  // namespace

std::string sioux_falls_net_text() {
  std::ostringstream out;
  out << "<NUMBER OF ZONES> 24\n";
  out << "<NUMBER OF NODES> 24\n";
  out << "<FIRST THRU NODE> 1\n";
  out << "<NUMBER OF LINKS> 76\n";
  out << "<END OF METADATA>\n\n";
  out << "~ init_node term_node capacity length free_flow_time b power speed toll type ;\n";
  for (const SfRow& r : kSfLinks) {
    out << "\t" << r.tail << "\t" << r.head << "\t" << fmt(r.cap) << "\t" << fmt(r.len) << "\t"
        << fmt(r.len) << "\t0.15\t4\t0\t0\t1\t;\n";
  }
  return out.str();
}

std::string sioux_falls_trips_text() {
  std::ostringstream out;
  out << "<NUMBER OF ZONES> 24\n";
  out << "<TOTAL OD FLOW> 360600.0\n";
  out << "<END OF METADATA>\n\n";
  for (int o = 0; o < 24; ++o) {
    out << "Origin " << o + 1 << "\n";
    for (int d = 0; d < 24; ++d) {
      out << "    " << d + 1 << " :    " << fmt(static_cast<double>(kSfOd[o][d])) << ";";
      if (d % 5 == 4 || d == 23) out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

const std::vector<int>& sioux_falls_benchmark_links() { return kSfBenchmarkLinks; }

void scale_offbenchmark_bcoef(Network& net, double xi) {
  if (!(xi > 0.0)) throw ValidationError("bcoef scale factor must be positive");
  for (int a = 0; a < net.num_links(); ++a) {
    bool benchmark = false;
    for (int id : kSfBenchmarkLinks) benchmark = benchmark || (id == a + 1);
    if (!benchmark) net.link(a).bcoef *= xi;
  }
}

Instance builtin_instance(std::string_view name) {
  if (name == "hearn") return make_hearn();
  if (name == "sioux_falls") return make_sioux_falls();
  throw ValidationError("unknown builtin instance '" + std::string(name) + "'");
}

}  // namespace capex
