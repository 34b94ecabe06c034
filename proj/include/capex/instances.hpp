#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "capex/network.hpp"

namespace capex {

struct Instance {
  Network net;
  DemandTable demand;
};

/// Bundled benchmark instances.
///   hearn       — the nine-node network, 18 links, 4 OD pairs.
///   sioux_falls — the 24-node/76-link network with bespoke expansion
///                 coefficients on the ten classic improvement links.
Instance builtin_instance(std::string_view name);

/// Raw TNTP text of the bundled Sioux-Falls data (unscaled units).
std::string sioux_falls_net_text();
std::string sioux_falls_trips_text();

/// 1-based ids of the ten Sioux-Falls links whose expansion coefficients come
/// from the classic improvement-link benchmark.
const std::vector<int>& sioux_falls_benchmark_links();

/// Multiplies bcoef by xi on every link outside the benchmark set.
void scale_offbenchmark_bcoef(Network& net, double xi);

}  // namespace capex
