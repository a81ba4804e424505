#include "seb/model.hpp"

#include <cmath>

#include "seb/error.hpp"
#include "seb/linear_regression.hpp"
#include "seb/optimizer.hpp"

namespace seb {

namespace {

constexpr std::uint64_t kInitTag = 0x1417;

void check_bucket(std::span<const Order* const> orders, std::size_t t, std::size_t rows, std::size_t cols) {
  if (orders.empty()) throw ConfigError("empty bucket");
  for (const Order* o : orders) {
    if (o->t != t) {
      throw AlignmentError("order " + std::to_string(o->id) + " has t=" + std::to_string(o->t) +
                           " in the bucket for t=" + std::to_string(t));
    }
    if (o->telemetry.rank() != 2 || o->telemetry.rows() != rows || o->telemetry.cols() != cols) {
      throw ShapeError("order " + std::to_string(o->id) + " telemetry is " + shape_to_string(o->telemetry.shape()) +
                       ", model expects [" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
  }
}

// km = label_mean + label_scale * raw
ad::Var to_km(ad::Var raw, const Normalizer& norm) {
  ad::Var out = raw;
  if (norm.label_scale != 1.0) out = ad::scale(out, norm.label_scale);
  if (norm.label_mean != 0.0) {
    out = ad::add(out, raw.graph().constant(Tensor(out.value().shape(), norm.label_mean)));
  }
  return out;
}

Tensor stack_flat(std::span<const Order* const> orders, const Normalizer* norm) {
  const Tensor& first = orders.front()->telemetry;
  const std::size_t width = first.size();
  Tensor out({orders.size(), width});
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const Tensor row = norm ? norm->apply(orders[i]->telemetry) : orders[i]->telemetry;
    std::copy(row.values().begin(), row.values().end(), out.row_span(i).begin());
  }
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearRegression: return "lr";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Transformer: return "transformer";
    case ModelKind::Seb: return "seb";
    case ModelKind::SebS3im: return "seb-s3im";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model '" + std::string(s) + "' (expected lr, mlp, transformer, seb or seb-s3im)");
}

std::string_view display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::LinearRegression: return "LR";
    case ModelKind::Mlp: return "MLP";
    case ModelKind::Transformer: return "Transformer";
    case ModelKind::Seb: return "SEB-Transformer";
    case ModelKind::SebS3im: return "SEB-Transformer*";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (seq_len == 0 || features == 0) throw ConfigError("sequence length and feature count must be positive");
  if (d_model == 0 || d_qk == 0 || d_v == 0 || ffn_hidden == 0) {
    throw ConfigError("model.d_model, model.d_qk, model.d_v and model.ffn_hidden must be positive");
  }
  if (blocks == 0) throw ConfigError("model.blocks must be at least 1");
  if ((residual || blocks > 1) && d_v != d_model) {
    throw ConfigError("model.d_v must equal model.d_model when blocks are residual or stacked");
  }
  if (gnn_layers == 0 || gnn_dim == 0) throw ConfigError("model.gnn_layers and model.gnn_dim must be positive");
  if (mlp_hidden == 0 || flat_hidden == 0) throw ConfigError("hidden widths must be positive");
}

GnnConfig ModelConfig::gnn() const {
  GnnConfig g;
  g.num_layers = gnn_layers;
  g.dims.assign(gnn_layers + 1, gnn_dim);
  g.window = gnn_window;
  return g;
}

Normalizer Normalizer::identity(std::size_t features) {
  Normalizer n;
  n.feature_mean.assign(features, 0.0);
  n.feature_scale.assign(features, 1.0);
  return n;
}

Normalizer Normalizer::fit(std::span<const Order* const> orders) {
  if (orders.empty()) throw ConfigError("cannot fit a normalizer on zero orders");
  const std::size_t F = orders.front()->telemetry.cols();
  Normalizer n = identity(F);
  std::vector<double> sum(F, 0.0), sq(F, 0.0);
  double count = 0.0, label_sum = 0.0, label_sq = 0.0;
  for (const Order* o : orders) {
    for (std::size_t r = 0; r < o->telemetry.rows(); ++r) {
      for (std::size_t c = 0; c < F; ++c) sum[c] += o->telemetry(r, c);
    }
    count += static_cast<double>(o->telemetry.rows());
    label_sum += o->label;
  }
  for (std::size_t c = 0; c < F; ++c) n.feature_mean[c] = sum[c] / count;
  n.label_mean = label_sum / static_cast<double>(orders.size());
  for (const Order* o : orders) {
    for (std::size_t r = 0; r < o->telemetry.rows(); ++r) {
      for (std::size_t c = 0; c < F; ++c) {
        const double d = o->telemetry(r, c) - n.feature_mean[c];
        sq[c] += d * d;
      }
    }
    label_sq += (o->label - n.label_mean) * (o->label - n.label_mean);
  }
  for (std::size_t c = 0; c < F; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    n.feature_scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  const double label_sd = std::sqrt(label_sq / static_cast<double>(orders.size()));
  n.label_scale = label_sd > 1e-12 ? label_sd : 1.0;
  return n;
}

Tensor Normalizer::apply(const Tensor& telemetry) const {
  if (telemetry.rank() != 2 || telemetry.cols() != feature_mean.size()) {
    throw ShapeError("normalizer has " + std::to_string(feature_mean.size()) + " features, telemetry is " +
                     shape_to_string(telemetry.shape()));
  }
  Tensor out = telemetry;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - feature_mean[c]) / feature_scale[c];
  }
  return out;
}

std::vector<Param*> Regressor::trainable_params() {
  std::vector<Param*> out;
  visit_params([&](const std::string&, Param& p) { out.push_back(&p); });
  return out;
}

SebTransformer::SebTransformer(const ModelConfig& cfg, std::size_t users, std::size_t batteries, bool use_graph,
                               ModelKind kind, Rng& rng)
    : cfg_(cfg), users_(users), batteries_(batteries), use_graph_(use_graph), kind_(kind) {
  cfg.validate();
  if (users == 0 || batteries == 0) throw ConfigError("model needs at least one user and one battery");
  normalizer = Normalizer::identity(cfg.features);
  input = Dense(cfg.features, cfg.d_model, rng);
  position = Param(glorot_uniform(cfg.seq_len, cfg.d_model, rng));
  const BlockOptions opts{cfg.residual, cfg.layer_norm};
  for (std::size_t i = 0; i < cfg.blocks; ++i) {
    blocks.emplace_back(i == 0 ? cfg.d_model : cfg.d_v, cfg.d_qk, cfg.d_v, cfg.ffn_hidden, opts, rng);
  }
  user_embedding = Param(glorot_uniform(1, cfg.gnn_dim, rng));
  battery_embedding = Param(glorot_uniform(1, cfg.gnn_dim, rng));
  battery_bias = Param(Tensor({batteries, cfg.gnn_dim}));
  gnn = make_gcn_stack(cfg.gnn(), rng);
  fusion = MlpHead({fusion_width(), cfg.mlp_hidden, 1}, rng);
}

std::size_t SebTransformer::fusion_width() const { return cfg_.d_model + 2 * cfg_.gnn_dim + cfg_.d_v; }

void SebTransformer::visit_params(const ParamVisitor& fn) {
  input.visit("input", fn);
  fn("position", position);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].visit("block." + std::to_string(i), fn);
  fn("node.user", user_embedding);
  fn("node.battery", battery_embedding);
  fn("node.battery_bias", battery_bias);
  for (std::size_t i = 0; i < gnn.size(); ++i) gnn[i].visit("gnn." + std::to_string(i), fn);
  fusion.visit("fusion", fn);
}

std::vector<Param*> SebTransformer::trainable_params() {
  std::vector<Param*> out;
  visit_params([&](const std::string& name, Param& p) {
    const bool graph_side = name.rfind("gnn.", 0) == 0 || name.rfind("node.", 0) == 0;
    if (use_graph_ || !graph_side) out.push_back(&p);
  });
  return out;
}

ad::Var SebTransformer::initial_node_features(ad::Graph& g) {
  ad::Var users = ad::repeat_rows(g.param(user_embedding), users_);
  ad::Var bats = ad::add(ad::repeat_rows(g.param(battery_embedding), batteries_), g.param(battery_bias));
  const ad::Var parts[] = {users, bats};
  return ad::concat_rows(parts);
}

std::pair<ad::Var, ad::Var> SebTransformer::encode_order(ad::Graph& g, const Order& order) {
  ad::Var x = g.constant(normalizer.apply(order.telemetry));
  ad::Var x0 = ad::add(input.forward(x), g.param(position));
  ad::Var h = x0;
  for (TransformerBlock& b : blocks) h = encode_sequence(b, h);
  return {ad::mean_rows(x0), ad::mean_rows(h)};
}

ad::Var SebTransformer::forward_bucket(ad::Graph& g, std::span<const Order* const> orders,
                                       const TemporalGraph& graph, std::size_t t) {
  check_bucket(orders, t, cfg_.seq_len, cfg_.features);
  if (graph.num_users() != users_ || graph.num_batteries() != batteries_) {
    throw LookupError("graph has " + std::to_string(graph.num_users()) + " users and " +
                      std::to_string(graph.num_batteries()) + " batteries, model was built for " +
                      std::to_string(users_) + " and " + std::to_string(batteries_));
  }
  const std::size_t n = orders.size();
  std::vector<std::size_t> user_rows, battery_rows;
  for (const Order* o : orders) {
    if (o->user.kind != NodeKind::User || o->user.index >= users_) {
      throw LookupError("order " + std::to_string(o->id) + " names unknown user " + std::to_string(o->user.index));
    }
    if (o->battery.kind != NodeKind::Battery || o->battery.index >= batteries_) {
      throw LookupError("order " + std::to_string(o->id) + " names unknown battery " +
                        std::to_string(o->battery.index));
    }
    user_rows.push_back(graph.row_of(o->user));
    battery_rows.push_back(graph.row_of(o->battery));
  }

  ad::Var slice;
  if (use_graph_) {
    ad::Var x1 = gnn_encode(cfg_.gnn(), gnn, graph, initial_node_features(g), t);
    const ad::Var parts[] = {ad::gather_rows(x1, battery_rows), ad::gather_rows(x1, user_rows)};
    slice = ad::concat_cols(parts);
  } else {
    slice = g.constant(Tensor({n, 2 * cfg_.gnn_dim}));
  }

  std::vector<ad::Var> pooled0, pooled2;
  pooled0.reserve(n);
  pooled2.reserve(n);
  for (const Order* o : orders) {
    auto [p0, p2] = encode_order(g, *o);
    pooled0.push_back(p0);
    pooled2.push_back(p2);
  }
  const ad::Var fused_parts[] = {ad::concat_rows(pooled0), slice, ad::concat_rows(pooled2)};
  return to_km(mlp_forward(fusion, ad::concat_cols(fused_parts)), normalizer);
}

MlpRegressor::MlpRegressor(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg.validate();
  normalizer = Normalizer::identity(cfg.features);
  head = MlpHead({cfg.seq_len * cfg.features, cfg.flat_hidden, 1}, rng);
}

ad::Var MlpRegressor::forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph&,
                                     std::size_t t) {
  check_bucket(orders, t, cfg_.seq_len, cfg_.features);
  return to_km(mlp_forward(head, g.constant(stack_flat(orders, &normalizer))), normalizer);
}

void MlpRegressor::visit_params(const ParamVisitor& fn) { head.visit("mlp", fn); }

LinearRegressor::LinearRegressor(const ModelConfig& cfg)
    : coef(Tensor({cfg.seq_len * cfg.features, 1})), intercept(Tensor({1, 1})), cfg_(cfg) {
  cfg.validate();
  normalizer = Normalizer::identity(cfg.features);
}

ad::Var LinearRegressor::forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph&,
                                        std::size_t t) {
  check_bucket(orders, t, cfg_.seq_len, cfg_.features);
  return ad::add_row(ad::matmul(g.constant(stack_flat(orders, nullptr)), g.param(coef)), g.param(intercept));
}

void LinearRegressor::visit_params(const ParamVisitor& fn) {
  fn("lr.coef", coef);
  fn("lr.intercept", intercept);
}

void LinearRegressor::fit(std::span<const Order* const> orders) {
  if (orders.empty()) throw ConfigError("cannot fit linear regression on zero orders");
  for (const Order* o : orders) {
    if (o->telemetry.rows() != cfg_.seq_len || o->telemetry.cols() != cfg_.features) {
      throw ShapeError("order " + std::to_string(o->id) + " telemetry is " + shape_to_string(o->telemetry.shape()));
    }
  }
  const Tensor X = stack_flat(orders, nullptr);
  std::vector<double> y;
  y.reserve(orders.size());
  for (const Order* o : orders) y.push_back(o->label);
  const LinearFit f = fit_linear_regression(X, y);
  coef.value = Tensor({f.coef.size(), 1}, f.coef);
  intercept.value = Tensor::scalar(f.intercept);
  coef.zero_grad();
  intercept.zero_grad();
}

std::unique_ptr<Regressor> make_model(ModelKind kind, const ModelConfig& cfg, std::size_t users,
                                      std::size_t batteries, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, kInitTag, 0);
  switch (kind) {
    case ModelKind::LinearRegression: return std::make_unique<LinearRegressor>(cfg);
    case ModelKind::Mlp: return std::make_unique<MlpRegressor>(cfg, rng);
    case ModelKind::Transformer: return std::make_unique<SebTransformer>(cfg, users, batteries, false, kind, rng);
    case ModelKind::Seb:
    case ModelKind::SebS3im: return std::make_unique<SebTransformer>(cfg, users, batteries, true, kind, rng);
  }
  throw ConfigError("unknown model kind");
}

Tensor flatten_telemetry(const Tensor& telemetry) {
  return Tensor({1, telemetry.size()}, std::vector<double>(telemetry.values().begin(), telemetry.values().end()));
}

}  // namespace seb
