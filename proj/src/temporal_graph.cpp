#include "seb/temporal_graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "seb/error.hpp"
#include "text_util.hpp"

namespace seb {

namespace {

constexpr std::string_view kGraphHeader = "#seb-graph v1";
constexpr std::string_view kDimsPrefix = "#dims ";

void insert_sorted(std::vector<std::uint32_t>& v, std::uint32_t x) {
  v.insert(std::upper_bound(v.begin(), v.end(), x), x);
}

std::string describe(NodeRef v) { return std::string(to_string(v.kind)) + " " + std::to_string(v.index); }

}  // namespace

const char* to_string(NodeKind kind) { return kind == NodeKind::User ? "user" : "battery"; }

GraphSnapshot::GraphSnapshot(std::uint32_t t, std::size_t users, std::size_t batteries)
    : t_(t), user_adj_(users), battery_adj_(batteries) {}

std::span<const std::uint32_t> GraphSnapshot::neighbor_indices(NodeRef v) const {
  const auto& adj = v.kind == NodeKind::User ? user_adj_ : battery_adj_;
  return adj.at(v.index);
}

TemporalGraph::TemporalGraph(std::size_t users, std::size_t batteries, std::size_t horizon)
    : users_(users), batteries_(batteries) {
  snapshots_.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) snapshots_.emplace_back(static_cast<std::uint32_t>(t), users, batteries);
}

void TemporalGraph::check_node(NodeRef v) const {
  const std::size_t limit = v.kind == NodeKind::User ? users_ : batteries_;
  if (v.index >= limit) {
    throw IndexError(describe(v) + " out of range (" + std::to_string(limit) + " " + to_string(v.kind) + "s)");
  }
}

void TemporalGraph::check_t(std::size_t t) const {
  if (t >= snapshots_.size()) {
    throw IndexError("timestep " + std::to_string(t) + " outside horizon " + std::to_string(snapshots_.size()));
  }
}

void TemporalGraph::add_edge(const SwapEdge& e) {
  if (e.user.kind == e.battery.kind) {
    throw BipartiteError("swap edge joins two " + std::string(to_string(e.user.kind)) + " nodes");
  }
  if (e.user.kind != NodeKind::User) {
    throw BipartiteError("swap edge endpoints are reversed: expected (user, battery)");
  }
  check_node(e.user);
  check_node(e.battery);
  check_t(e.t);
  GraphSnapshot& snap = snapshots_[e.t];
  auto& unbrs = snap.user_adj_[e.user.index];
  if (std::binary_search(unbrs.begin(), unbrs.end(), e.battery.index)) {
    throw ContractError("duplicate swap edge (" + describe(e.user) + ", " + describe(e.battery) + ", t=" +
                        std::to_string(e.t) + ")");
  }
  snap.edges_.push_back(e);
  insert_sorted(unbrs, e.battery.index);
  insert_sorted(snap.battery_adj_[e.battery.index], e.user.index);
}

std::vector<NodeRef> TemporalGraph::neighbors(NodeRef v, std::size_t t) const {
  check_t(t);
  check_node(v);
  const NodeKind other = v.kind == NodeKind::User ? NodeKind::Battery : NodeKind::User;
  std::vector<NodeRef> out;
  for (std::uint32_t i : snapshots_[t].neighbor_indices(v)) out.push_back({other, i});
  return out;
}

std::size_t TemporalGraph::degree(NodeRef v, std::size_t t) const {
  check_t(t);
  check_node(v);
  return snapshots_[t].neighbor_indices(v).size();
}

std::map<std::size_t, std::size_t> TemporalGraph::degree_histogram(std::size_t t) const {
  check_t(t);
  std::map<std::size_t, std::size_t> hist;
  const GraphSnapshot& snap = snapshots_[t];
  for (const auto& adj : snap.user_adj_) ++hist[adj.size()];
  for (const auto& adj : snap.battery_adj_) ++hist[adj.size()];
  return hist;
}

const GraphSnapshot& TemporalGraph::snapshot(std::size_t t) const {
  check_t(t);
  return snapshots_[t];
}

std::size_t TemporalGraph::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : snapshots_) n += s.edges().size();
  return n;
}

std::size_t TemporalGraph::row_of(NodeRef v) const {
  check_node(v);
  return v.kind == NodeKind::User ? v.index : users_ + v.index;
}

NodeRef TemporalGraph::node_at(std::size_t row) const {
  if (row >= num_nodes()) throw IndexError("node row " + std::to_string(row) + " out of range");
  if (row < users_) return NodeRef::user(static_cast<std::uint32_t>(row));
  return NodeRef::battery(static_cast<std::uint32_t>(row - users_));
}

ad::NeighborLists TemporalGraph::window_adjacency(std::size_t t, std::size_t window) const {
  check_t(t);
  ad::NeighborLists lists(num_nodes());
  const std::size_t first = t >= window ? t - window : 0;
  const auto offset = static_cast<std::uint32_t>(users_);
  for (std::size_t s = first; s <= t; ++s) {
    for (const SwapEdge& e : snapshots_[s].edges()) {
      lists[e.user.index].push_back(offset + e.battery.index);
      lists[offset + e.battery.index].push_back(e.user.index);
    }
  }
  for (auto& l : lists) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return lists;
}

TemporalGraph TemporalGraph::without_node_edges(NodeRef v) const {
  check_node(v);
  TemporalGraph out(users_, batteries_, horizon());
  for (const auto& snap : snapshots_) {
    for (const SwapEdge& e : snap.edges()) {
      if (e.user == v || e.battery == v) continue;
      out.add_edge(e);
    }
  }
  return out;
}

void write_graph(const TemporalGraph& g, std::ostream& out) {
  std::string buf;
  buf += kGraphHeader;
  buf += '\n';
  buf += std::string(kDimsPrefix) + "users=" + std::to_string(g.num_users()) +
         " batteries=" + std::to_string(g.num_batteries()) + " horizon=" + std::to_string(g.horizon()) + '\n';
  for (std::size_t t = 0; t < g.horizon(); ++t) {
    for (const SwapEdge& e : g.snapshot(t).edges()) {
      buf += std::to_string(e.t) + ',' + std::to_string(e.user.index) + ',' + std::to_string(e.battery.index) +
             ',' + std::to_string(e.station) + '\n';
    }
  }
  out << buf;
}

TemporalGraph read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing graph header", lineno);
  if (line != kGraphHeader) {
    if (line.rfind("#seb-graph", 0) == 0) throw VersionError("unsupported graph version '" + line + "'", lineno);
    throw ParseError("expected header '" + std::string(kGraphHeader) + "'", lineno);
  }
  std::size_t users = 0, batteries = 0, horizon = 0;
  bool have_dims = false;
  std::vector<std::pair<std::array<std::uint64_t, 4>, std::size_t>> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw ParseError("empty line", lineno);
    if (line.rfind(kDimsPrefix, 0) == 0) {
      for (std::string_view field : text::split(std::string_view(line).substr(kDimsPrefix.size()), ' ')) {
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw ParseError("malformed dims field", lineno);
        const std::uint64_t v = text::parse_u64(field.substr(eq + 1), lineno);
        const auto key = field.substr(0, eq);
        if (key == "users") users = v;
        else if (key == "batteries") batteries = v;
        else if (key == "horizon") horizon = v;
        else throw ParseError("unknown dims key '" + std::string(key) + "'", lineno);
      }
      have_dims = true;
      continue;
    }
    const auto fields = text::split(line);
    if (fields.size() != 4) throw ParseError("expected 4 fields t,user,battery,station", lineno);
    std::array<std::uint64_t, 4> r{};
    for (std::size_t i = 0; i < 4; ++i) r[i] = text::parse_u64(fields[i], lineno);
    records.emplace_back(r, lineno);
  }
  if (!have_dims) {
    for (const auto& [r, ln] : records) {
      horizon = std::max<std::size_t>(horizon, r[0] + 1);
      users = std::max<std::size_t>(users, r[1] + 1);
      batteries = std::max<std::size_t>(batteries, r[2] + 1);
    }
  }
  TemporalGraph g(users, batteries, horizon);
  for (const auto& [r, ln] : records) {
    try {
      g.add_edge({NodeRef::user(static_cast<std::uint32_t>(r[1])), NodeRef::battery(static_cast<std::uint32_t>(r[2])),
                  static_cast<std::uint32_t>(r[0]), static_cast<std::uint32_t>(r[3])});
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), ln);
    }
  }
  return g;
}

void write_graph_file(const TemporalGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_graph(g, out);
  if (!out) throw IoError("failed writing " + path.string());
}

TemporalGraph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_graph(in);
}

}  // namespace seb
