#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capex/errors.hpp"

namespace capex {

/// Directed link with BPR parameters and capacity-expansion data.
struct Link {
  int id = 0;          // dense 0-based index in file order
  int tail = 0;        // 0-based node ids
  int head = 0;
  double t0 = 0.0;     // free-flow travel time
  double cap = 0.0;    // base capacity
  double umax = 0.0;   // maximum added capacity (0 = not expandable)
  double bcoef = 1.0;  // expansion cost coefficient
};

class Network {
 public:
  Network() = default;
  Network(int num_nodes, std::vector<Link> links);

  int num_nodes() const { return num_nodes_; }
  int num_links() const { return static_cast<int>(links_.size()); }
  const Link& link(int id) const { return links_[id]; }
  Link& link(int id) { return links_[id]; }
  const std::vector<Link>& links() const { return links_; }
  std::span<const int> out_links(int node) const;

  std::vector<double> umax_vector() const;

 private:
  void build_adjacency();

  int num_nodes_ = 0;
  std::vector<Link> links_;
  std::vector<int> out_offset_;
  std::vector<int> out_ids_;
};

struct OdPair {
  int origin = 0;  // 0-based
  int destination = 0;
  double demand = 0.0;
};

struct DemandTable {
  std::vector<OdPair> entries;
  double total() const;
};

/// A route is a loop-free link-id sequence; link-route incidence is implicit.
struct Route {
  std::vector<int> links;
};

/// Working route lists, one per demand-table entry.
struct PathSet {
  std::vector<std::vector<Route>> per_od;
};

bool route_connects(const Network& net, const Route& route, int origin, int destination);

// --- TNTP-style readers/writers ------------------------------------------

Network parse_net(std::istream& in);
Network parse_net_text(std::string_view text);
void write_net(const Network& net, std::ostream& out);

DemandTable parse_trips(std::istream& in, int num_nodes);
DemandTable parse_trips_text(std::string_view text, int num_nodes);

/// Sidecar rows `link_id umax bcoef` (1-based link ids); links not listed keep
/// the defaults umax = 10*cap, bcoef = default_bcoef.
void apply_expansion_sidecar(Network& net, std::istream& in);
void apply_expansion_defaults(Network& net, double default_bcoef);

/// Checks that every OD pair with positive demand is connected.
void validate_connectivity(const Network& net, const DemandTable& demand);

// --- Shortest paths --------------------------------------------------------

struct ShortestPathTree {
  std::vector<double> dist;   // +inf when unreachable
  std::vector<int> pred_link; // -1 at the origin and unreachable nodes
};

/// One-to-all shortest routes under nonnegative link costs (label-setting).
ShortestPathTree shortest_path(const Network& net, std::span<const double> cost, int origin);

/// Label-correcting variant that tolerates negative link costs.
/// Throws SolveError when a negative cycle is detected.
ShortestPathTree shortest_path_general(const Network& net, std::span<const double> cost,
                                       int origin);

/// Extracts the origin->destination route from a tree; throws InfeasibleError
/// when the destination is unreachable.
std::vector<int> route_to(const Network& net, const ShortestPathTree& tree, int destination);

}  // namespace capex
