#include "capex/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

namespace capex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Strips TNTP '~' comments and turns ';' separators into whitespace.
std::string clean_line(std::string line) {
  if (auto pos = line.find('~'); pos != std::string::npos) line.erase(pos);
  std::replace(line.begin(), line.end(), ';', ' ');
  std::replace(line.begin(), line.end(), '\t', ' ');
  std::replace(line.begin(), line.end(), '\r', ' ');
  return line;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \n") == std::string::npos;
}

// Parses `<TAG> value` metadata lines; returns false when the line is not a tag.
bool parse_metadata(const std::string& line, std::string& tag, std::string& value) {
  auto open = line.find('<');
  if (open == std::string::npos) return false;
  auto close = line.find('>', open);
  if (close == std::string::npos) return false;
  tag = line.substr(open + 1, close - open - 1);
  value = line.substr(close + 1);
  return true;
}

double to_double(const std::string& tok, int line_no) {
  try {
    size_t used = 0;
    double val = std::stod(tok, &used);
    if (used != tok.size()) throw ParseError("");
    return val;
  } catch (...) {
    throw ParseError("line " + std::to_string(line_no) + ": bad numeric field '" + tok + "'");
  }
}

int to_int(const std::string& tok, int line_no) {
  double v = to_double(tok, line_no);
  int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 1e-9)
    throw ParseError("line " + std::to_string(line_no) + ": expected integer, got '" + tok + "'");
  return i;
}

}  // namespace

Network::Network(int num_nodes, std::vector<Link> links)
    : num_nodes_(num_nodes), links_(std::move(links)) {
  if (num_nodes_ <= 0) throw ValidationError("network needs at least one node");
  for (int i = 0; i < num_links(); ++i) {
    Link& a = links_[i];
    a.id = i;
    const std::string where = "link " + std::to_string(i + 1);
    if (a.tail < 0 || a.tail >= num_nodes_ || a.head < 0 || a.head >= num_nodes_)
      throw ValidationError(where + ": node id out of range");
    if (!(a.t0 > 0.0)) throw ValidationError(where + ": free-flow time must be positive");
    if (!(a.cap > 0.0)) throw ValidationError(where + ": capacity must be positive");
    if (a.umax < 0.0) throw ValidationError(where + ": negative expansion bound");
    if (!(a.bcoef > 0.0)) throw ValidationError(where + ": expansion coefficient must be positive");
  }
  build_adjacency();
}

void Network::build_adjacency() {
  out_offset_.assign(num_nodes_ + 1, 0);
  for (const Link& a : links_) out_offset_[a.tail + 1]++;
  for (int n = 0; n < num_nodes_; ++n) out_offset_[n + 1] += out_offset_[n];
  out_ids_.assign(links_.size(), 0);
  std::vector<int> cursor(out_offset_.begin(), out_offset_.end() - 1);
  for (const Link& a : links_) out_ids_[cursor[a.tail]++] = a.id;
}

std::span<const int> Network::out_links(int node) const {
  return {out_ids_.data() + out_offset_[node],
          static_cast<size_t>(out_offset_[node + 1] - out_offset_[node])};
}

std::vector<double> Network::umax_vector() const {
  std::vector<double> u(links_.size());
  for (int a = 0; a < num_links(); ++a) u[a] = links_[a].umax;
  return u;
}

double DemandTable::total() const {
  double s = 0.0;
  for (const OdPair& w : entries) s += w.demand;
  return s;
}

bool route_connects(const Network& net, const Route& route, int origin, int destination) {
  if (route.links.empty()) return origin == destination;
  int at = origin;
  for (int a : route.links) {
    if (a < 0 || a >= net.num_links()) return false;
    if (net.link(a).tail != at) return false;
    at = net.link(a).head;
  }
  return at == destination;
}

Network parse_net(std::istream& in) {
  int declared_nodes = -1;
  int declared_links = -1;
  std::vector<Link> links;
  int max_node = 0;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string tag, value;
    if (parse_metadata(raw, tag, value)) {
      std::string upper = tag;
      std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
      if (upper == "NUMBER OF NODES") declared_nodes = to_int(value, line_no);
      if (upper == "NUMBER OF LINKS") declared_links = to_int(value, line_no);
      continue;
    }
    std::string line = clean_line(raw);
    if (blank(line)) continue;

    std::istringstream row(line);
    std::vector<std::string> tok;
    std::string t;
    while (row >> t) tok.push_back(t);
    if (tok.size() < 10)
      throw ParseError("line " + std::to_string(line_no) + ": expected 10 link fields, got " +
                       std::to_string(tok.size()));
    Link a;
    a.tail = to_int(tok[0], line_no) - 1;
    a.head = to_int(tok[1], line_no) - 1;
    a.cap = to_double(tok[2], line_no);
    a.t0 = to_double(tok[4], line_no);
    if (a.tail < 0 || a.head < 0)
      throw ParseError("line " + std::to_string(line_no) + ": node ids are 1-based");
    if (!(a.cap > 0.0))
      throw ValidationError("line " + std::to_string(line_no) + ": nonpositive capacity");
    if (!(a.t0 > 0.0))
      throw ValidationError("line " + std::to_string(line_no) + ": nonpositive free-flow time");
    a.umax = 10.0 * a.cap;
    a.bcoef = 1.0;
    max_node = std::max({max_node, a.tail + 1, a.head + 1});
    links.push_back(a);
  }

  if (links.empty()) throw ValidationError("net file has no link rows");
  if (declared_links >= 0 && declared_links != static_cast<int>(links.size()))
    throw ValidationError("net file declares " + std::to_string(declared_links) + " links, found " +
                          std::to_string(links.size()));
  int nodes = std::max(declared_nodes, max_node);
  if (declared_nodes >= 0 && max_node > declared_nodes)
    throw ValidationError("net file references node beyond declared count");
  return Network(nodes, std::move(links));
}

Network parse_net_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_net(in);
}

void write_net(const Network& net, std::ostream& out) {
  out << "<NUMBER OF NODES> " << net.num_nodes() << "\n";
  out << "<NUMBER OF LINKS> " << net.num_links() << "\n";
  out << "<END OF METADATA>\n";
  out << "~ init_node term_node capacity length free_flow_time b power speed toll type ;\n";
  out << std::setprecision(17);
  for (const Link& a : net.links()) {
    out << a.tail + 1 << "\t" << a.head + 1 << "\t" << a.cap << "\t" << a.t0 << "\t" << a.t0
        << "\t0.15\t4\t0\t0\t1\t;\n";
  }
}

DemandTable parse_trips(std::istream& in, int num_nodes) {
  DemandTable table;
  std::set<std::pair<int, int>> seen;
  int origin = -1;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string tag, value;
    if (parse_metadata(raw, tag, value)) continue;
    std::string line = raw;
    if (auto pos = line.find('~'); pos != std::string::npos) line.erase(pos);
    if (blank(line)) continue;

    std::istringstream row(line);
    std::string first;
    row >> first;
    std::string lowered = first;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), ::tolower);
    if (lowered == "origin") {
      std::string id;
      if (!(row >> id)) throw ParseError("line " + std::to_string(line_no) + ": missing origin id");
      origin = to_int(id, line_no) - 1;
      if (origin < 0 || origin >= num_nodes)
        throw ValidationError("line " + std::to_string(line_no) + ": unknown origin node");
      continue;
    }
    if (origin < 0)
      throw ParseError("line " + std::to_string(line_no) + ": destination row before any origin");

    // Destination rows: `dest : flow; dest : flow; ...`
    std::string rest;
    std::getline(row, rest);
    std::string entry_text = first + rest;
    std::replace(entry_text.begin(), entry_text.end(), ';', ' ');
    std::replace(entry_text.begin(), entry_text.end(), ':', ' ');
    std::istringstream entries(entry_text);
    std::string dtok, ftok;
    while (entries >> dtok) {
      if (!(entries >> ftok))
        throw ParseError("line " + std::to_string(line_no) + ": destination without flow");
      int dest = to_int(dtok, line_no) - 1;
      double flow = to_double(ftok, line_no);
      if (dest < 0 || dest >= num_nodes)
        throw ValidationError("line " + std::to_string(line_no) + ": unknown destination node");
      if (flow < 0.0)
        throw ValidationError("line " + std::to_string(line_no) + ": negative demand");
      if (flow == 0.0) continue;
      if (dest == origin)
        throw ValidationError("line " + std::to_string(line_no) +
                              ": origin equals destination with positive demand");
      if (!seen.insert({origin, dest}).second)
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate OD pair");
      table.entries.push_back({origin, dest, flow});
    }
  }
  return table;
}

DemandTable parse_trips_text(std::string_view text, int num_nodes) {
  std::istringstream in{std::string(text)};
  return parse_trips(in, num_nodes);
}

void apply_expansion_defaults(Network& net, double default_bcoef) {
  if (!(default_bcoef > 0.0)) throw ValidationError("default expansion coefficient must be positive");
  for (int a = 0; a < net.num_links(); ++a) {
    net.link(a).umax = 10.0 * net.link(a).cap;
    net.link(a).bcoef = default_bcoef;
  }
}

void apply_expansion_sidecar(Network& net, std::istream& in) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = clean_line(raw);
    if (blank(line)) continue;
    std::istringstream row(line);
    std::string id_tok, umax_tok, b_tok;
    if (!(row >> id_tok >> umax_tok >> b_tok))
      throw ParseError("expansion line " + std::to_string(line_no) +
                       ": expected `link_id umax bcoef`");
    int id = to_int(id_tok, line_no) - 1;
    if (id < 0 || id >= net.num_links())
      throw ValidationError("expansion line " + std::to_string(line_no) + ": unknown link id");
    double umax = to_double(umax_tok, line_no);
    double bcoef = to_double(b_tok, line_no);
    if (umax < 0.0)
      throw ValidationError("expansion line " + std::to_string(line_no) + ": negative umax");
    if (!(bcoef > 0.0))
      throw ValidationError("expansion line " + std::to_string(line_no) + ": nonpositive bcoef");
    net.link(id).umax = umax;
    net.link(id).bcoef = bcoef;
  }
}

void validate_connectivity(const Network& net, const DemandTable& demand) {
  // BFS once per distinct origin.
  std::vector<int> origins;
  for (const OdPair& w : demand.entries) origins.push_back(w.origin);
  std::sort(origins.begin(), origins.end());
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());

  std::vector<std::vector<bool>> reach;
  std::vector<int> origin_slot(net.num_nodes(), -1);
  for (int o : origins) {
    origin_slot[o] = static_cast<int>(reach.size());
    std::vector<bool> seen(net.num_nodes(), false);
    std::deque<int> queue{o};
    seen[o] = true;
    while (!queue.empty()) {
      int n = queue.front();
      queue.pop_front();
      for (int a : net.out_links(n)) {
        int m = net.link(a).head;
        if (!seen[m]) {
          seen[m] = true;
          queue.push_back(m);
        }
      }
    }
    reach.push_back(std::move(seen));
  }
  for (const OdPair& w : demand.entries) {
    if (!reach[origin_slot[w.origin]][w.destination])
      throw InfeasibleError("no route from node " + std::to_string(w.origin + 1) + " to node " +
                            std::to_string(w.destination + 1));
  }
}

ShortestPathTree shortest_path(const Network& net, std::span<const double> cost, int origin) {
  for (double c : cost)
    if (c < 0.0) throw ValidationError("shortest_path requires nonnegative costs");
  ShortestPathTree tree;
  tree.dist.assign(net.num_nodes(), kInf);
  tree.pred_link.assign(net.num_nodes(), -1);
  tree.dist[origin] = 0.0;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.push({0.0, origin});
  while (!heap.empty()) {
    auto [d, n] = heap.top();
    heap.pop();
    if (d > tree.dist[n]) continue;
    for (int a : net.out_links(n)) {
      int m = net.link(a).head;
      double nd = d + cost[a];
      if (nd < tree.dist[m]) {
        tree.dist[m] = nd;
        tree.pred_link[m] = a;
        heap.push({nd, m});
      }
    }
  }
  return tree;
}

ShortestPathTree shortest_path_general(const Network& net, std::span<const double> cost,
                                       int origin) {
  ShortestPathTree tree;
  tree.dist.assign(net.num_nodes(), kInf);
  tree.pred_link.assign(net.num_nodes(), -1);
  tree.dist[origin] = 0.0;

  std::deque<int> queue{origin};
  std::vector<bool> queued(net.num_nodes(), false);
  std::vector<int> relaxations(net.num_nodes(), 0);
  queued[origin] = true;
  while (!queue.empty()) {
    int n = queue.front();
    queue.pop_front();
    queued[n] = false;
    double d = tree.dist[n];
    for (int a : net.out_links(n)) {
      int m = net.link(a).head;
      double nd = d + cost[a];
      if (nd < tree.dist[m] - 1e-300) {
        tree.dist[m] = nd;
        tree.pred_link[m] = a;
        if (++relaxations[m] > net.num_nodes() + 1)
          throw SolveError("negative cycle under the supplied link costs");
        if (!queued[m]) {
          // Small-label-first heuristic.
          if (!queue.empty() && nd < tree.dist[queue.front()])
            queue.push_front(m);
          else
            queue.push_back(m);
          queued[m] = true;
        }
      }
    }
  }
  return tree;
}

std::vector<int> route_to(const Network& net, const ShortestPathTree& tree, int destination) {
  if (!(tree.dist[destination] < kInf))
    throw InfeasibleError("destination node " + std::to_string(destination + 1) +
                          " is unreachable");
  std::vector<int> links;
  int at = destination;
  while (tree.pred_link[at] >= 0) {
    int a = tree.pred_link[at];
    links.push_back(a);
    at = net.link(a).tail;
  }
  std::reverse(links.begin(), links.end());
  return links;
}

}  // namespace capex
