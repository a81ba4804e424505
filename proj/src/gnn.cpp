#include "seb/gnn.hpp"

#include "seb/error.hpp"
#include "seb/optimizer.hpp"

namespace seb {

GcnLayer::GcnLayer(std::size_t d_in, std::size_t d_out, Activation act, Rng& rng)
    : W(glorot_uniform(d_in, d_out, rng)), B(glorot_uniform(d_in, d_out, rng)), activation(act) {}

void GcnLayer::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(join_name(prefix, "W"), W);
  fn(join_name(prefix, "B"), B);
}

void GnnConfig::validate() const {
  if (dims.size() != num_layers + 1) {
    throw ConfigError("gnn config lists " + std::to_string(dims.size()) + " widths for " +
                      std::to_string(num_layers) + " layers");
  }
  for (auto d : dims) {
    if (d == 0) throw ConfigError("gnn layer widths must be positive");
  }
}

std::vector<GcnLayer> make_gcn_stack(const GnnConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<GcnLayer> layers;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const Activation act = l + 1 == cfg.num_layers ? Activation::Identity : Activation::ReLU;
    layers.emplace_back(cfg.dims[l], cfg.dims[l + 1], act, rng);
  }
  return layers;
}

ad::NeighborLists snapshot_adjacency(const GraphSnapshot& snapshot) {
  const std::size_t users = snapshot.num_users();
  ad::NeighborLists lists(users + snapshot.num_batteries());
  for (std::uint32_t u = 0; u < users; ++u) {
    for (std::uint32_t b : snapshot.neighbor_indices(NodeRef::user(u)))
      lists[u].push_back(static_cast<std::uint32_t>(users) + b);
  }
  for (std::uint32_t b = 0; b < snapshot.num_batteries(); ++b) {
    lists[users + b].assign(snapshot.neighbor_indices(NodeRef::battery(b)).begin(),
                            snapshot.neighbor_indices(NodeRef::battery(b)).end());
  }
  return lists;
}

ad::Var gcn_layer_forward(GcnLayer& layer, ad::Var H, std::shared_ptr<const ad::NeighborLists> adjacency) {
  const Tensor& h = H.value();
  if (h.rank() != 2 || h.rows() != adjacency->size()) {
    throw ShapeError("gcn layer: feature matrix " + shape_to_string(h.shape()) + " for a graph with " +
                     std::to_string(adjacency->size()) + " nodes");
  }
  if (h.cols() != layer.d_in()) {
    throw ShapeError("gcn layer: feature width " + std::to_string(h.cols()) + " but layer expects " +
                     std::to_string(layer.d_in()));
  }
  ad::Graph& g = H.graph();
  ad::Var W = g.param(layer.W);
  ad::Var B = g.param(layer.B);
  ad::Var messages = ad::matmul(ad::neighbor_mean(H, std::move(adjacency)), W);
  ad::Var out = ad::add(messages, ad::matmul(H, B));
  return layer.activation == Activation::ReLU ? ad::relu(out) : out;
}

ad::Var gcn_layer_forward(GcnLayer& layer, ad::Var H, const GraphSnapshot& snapshot) {
  return gcn_layer_forward(layer, H, std::make_shared<const ad::NeighborLists>(snapshot_adjacency(snapshot)));
}

ad::Var gnn_encode(const GnnConfig& cfg, std::vector<GcnLayer>& layers, const TemporalGraph& g, ad::Var H0,
                   std::size_t t) {
  cfg.validate();
  if (layers.size() != cfg.num_layers) {
    throw ConfigError("gnn config has " + std::to_string(cfg.num_layers) + " layers but " +
                      std::to_string(layers.size()) + " were supplied");
  }
  std::size_t width = H0.value().cols();
  if (width != cfg.dims[0]) {
    throw ConfigError("gnn input width " + std::to_string(width) + " differs from configured " +
                      std::to_string(cfg.dims[0]));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].d_in() != cfg.dims[l] || layers[l].d_out() != cfg.dims[l + 1]) {
      throw ConfigError("gnn layer " + std::to_string(l) + " does not chain with the configured widths");
    }
  }
  if (H0.value().rows() != g.num_nodes()) {
    throw ShapeError("gnn input has " + std::to_string(H0.value().rows()) + " rows for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  g.snapshot(t);
  if (layers.empty()) return H0;
  auto adjacency = std::make_shared<const ad::NeighborLists>(g.window_adjacency(t, cfg.window));
  ad::Var h = H0;
  for (auto& layer : layers) h = gcn_layer_forward(layer, h, adjacency);
  return h;
}

}  // namespace seb
