#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "seb/autodiff.hpp"

namespace seb {

enum class NodeKind : std::uint8_t { User, Battery };
enum class EdgeKind : std::uint8_t { Swap };

inline constexpr std::array<NodeKind, 2> kNodeKinds{NodeKind::User, NodeKind::Battery};
inline constexpr std::array<EdgeKind, 1> kEdgeKinds{EdgeKind::Swap};

const char* to_string(NodeKind kind);

struct NodeRef {
  NodeKind kind = NodeKind::User;
  std::uint32_t index = 0;

  static constexpr NodeRef user(std::uint32_t i) { return {NodeKind::User, i}; }
  static constexpr NodeRef battery(std::uint32_t i) { return {NodeKind::Battery, i}; }

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct SwapEdge {
  NodeRef user;
  NodeRef battery;
  std::uint32_t t = 0;
  std::uint32_t station = 0;

  friend bool operator==(const SwapEdge&, const SwapEdge&) = default;
};

// All swaps stamped with one timestep.
class GraphSnapshot {
 public:
  GraphSnapshot(std::uint32_t t, std::size_t users, std::size_t batteries);

  std::uint32_t t() const noexcept { return t_; }
  std::size_t num_users() const noexcept { return user_adj_.size(); }
  std::size_t num_batteries() const noexcept { return battery_adj_.size(); }
  const std::vector<SwapEdge>& edges() const noexcept { return edges_; }
  // Opposite-kind indices adjacent to v, ascending.
  std::span<const std::uint32_t> neighbor_indices(NodeRef v) const;

  friend bool operator==(const GraphSnapshot&, const GraphSnapshot&) = default;

 private:
  friend class TemporalGraph;

  std::uint32_t t_;
  std::vector<SwapEdge> edges_;
  std::vector<std::vector<std::uint32_t>> user_adj_;
  std::vector<std::vector<std::uint32_t>> battery_adj_;
};

// Sequence of user-battery swap snapshots for t = 0 .. horizon-1. Node rows
// used by the encoders place users first, then batteries.
class TemporalGraph {
 public:
  TemporalGraph(std::size_t users, std::size_t batteries, std::size_t horizon);

  // Rejects same-kind endpoints (BipartiteError), out-of-range indices or
  // timesteps (IndexError) and a repeated (user, battery, t) (ContractError).
  void add_edge(const SwapEdge& e);

  std::vector<NodeRef> neighbors(NodeRef v, std::size_t t) const;
  std::size_t degree(NodeRef v, std::size_t t) const;
  // degree -> number of nodes with that degree in snapshot t
  std::map<std::size_t, std::size_t> degree_histogram(std::size_t t) const;

  const GraphSnapshot& snapshot(std::size_t t) const;
  std::size_t horizon() const noexcept { return snapshots_.size(); }
  std::size_t num_users() const noexcept { return users_; }
  std::size_t num_batteries() const noexcept { return batteries_; }
  std::size_t num_nodes() const noexcept { return users_ + batteries_; }
  std::size_t edge_count() const noexcept;

  std::size_t row_of(NodeRef v) const;
  NodeRef node_at(std::size_t row) const;

  // Deduplicated neighbor rows over snapshots max(0, t - window) .. t.
  ad::NeighborLists window_adjacency(std::size_t t, std::size_t window) const;

  // Copy with every edge touching `v` removed from all snapshots.
  TemporalGraph without_node_edges(NodeRef v) const;

  friend bool operator==(const TemporalGraph&, const TemporalGraph&) = default;

 private:
  void check_node(NodeRef v) const;
  void check_t(std::size_t t) const;

  std::size_t users_;
  std::size_t batteries_;
  std::vector<GraphSnapshot> snapshots_;
};

// `#seb-graph v1` text format: one `t,user,battery,station` line per edge.
void write_graph(const TemporalGraph& g, std::ostream& out);
TemporalGraph read_graph(std::istream& in);
void write_graph_file(const TemporalGraph& g, const std::filesystem::path& path);
TemporalGraph read_graph_file(const std::filesystem::path& path);

}  // namespace seb
