#pragma once

#include <memory>
#include <vector>

#include "seb/autodiff.hpp"
#include "seb/params.hpp"
#include "seb/rng.hpp"
#include "seb/temporal_graph.hpp"

namespace seb {

enum class Activation { ReLU, Identity };

// h_v' = act(mean_{u in N(v)} h_u * W + h_v * B), row-vector convention.
struct GcnLayer {
  Param W;  // d_in x d_out
  Param B;  // d_in x d_out
  Activation activation = Activation::ReLU;

  GcnLayer() = default;
  GcnLayer(std::size_t d_in, std::size_t d_out, Activation act, Rng& rng);

  std::size_t d_in() const { return W.value.rows(); }
  std::size_t d_out() const { return W.value.cols(); }
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct GnnConfig {
  std::size_t num_layers = 2;
  // num_layers + 1 entries: input width, then each layer's output width.
  std::vector<std::size_t> dims{16, 16, 16};
  // Extra past snapshots merged into the adjacency at t.
  std::size_t window = 0;

  void validate() const;
};

// Hidden layers use ReLU, the last one Identity.
std::vector<GcnLayer> make_gcn_stack(const GnnConfig& cfg, Rng& rng);

// Rows ordered users first, then batteries, matching TemporalGraph::row_of.
ad::NeighborLists snapshot_adjacency(const GraphSnapshot& snapshot);

ad::Var gcn_layer_forward(GcnLayer& layer, ad::Var H, std::shared_ptr<const ad::NeighborLists> adjacency);
ad::Var gcn_layer_forward(GcnLayer& layer, ad::Var H, const GraphSnapshot& snapshot);

// Applies the layer stack over the (windowed) snapshot at t and returns one
// embedding row per node.
ad::Var gnn_encode(const GnnConfig& cfg, std::vector<GcnLayer>& layers, const TemporalGraph& g, ad::Var H0,
                   std::size_t t);

}  // namespace seb
