#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seb/attention.hpp"
#include "seb/autodiff.hpp"
#include "seb/gnn.hpp"
#include "seb/params.hpp"
#include "seb/scenario.hpp"
#include "seb/temporal_graph.hpp"

namespace seb {

enum class ModelKind { LinearRegression, Mlp, Transformer, Seb, SebS3im };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::LinearRegression, ModelKind::Mlp, ModelKind::Transformer,
                                               ModelKind::Seb, ModelKind::SebS3im};

// "lr", "mlp", "transformer", "seb", "seb-s3im"
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);
// Row label used in reports.
std::string_view display_name(ModelKind kind);

struct ModelConfig {
  std::size_t seq_len = kSequenceLength;
  std::size_t features = kFeatureCount;
  std::size_t d_model = 16;
  std::size_t d_qk = 16;
  std::size_t d_v = 16;
  std::size_t ffn_hidden = 32;
  std::size_t blocks = 1;
  bool residual = true;
  bool layer_norm = true;
  std::size_t gnn_layers = 2;
  std::size_t gnn_dim = 16;
  std::size_t gnn_window = 0;
  std::size_t mlp_hidden = 32;
  // Hidden width of the flattened-telemetry MLP baseline.
  std::size_t flat_hidden = 32;

  void validate() const;
  GnnConfig gnn() const;
};

// Per-feature z-scoring of telemetry and an affine label scale. The default
// is the identity map.
struct Normalizer {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  double label_mean = 0.0;
  double label_scale = 1.0;

  static Normalizer identity(std::size_t features);
  static Normalizer fit(std::span<const Order* const> orders);

  Tensor apply(const Tensor& telemetry) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

// Common surface of every benchmarked model. forward_bucket maps orders that
// share one swap timestep t to an n x 1 column of predicted range in km.
class Regressor {
 public:
  virtual ~Regressor() = default;

  virtual ModelKind kind() const = 0;
  virtual ad::Var forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph& graph,
                                 std::size_t t) = 0;
  // Every parameter, frozen ones included, in a fixed order.
  virtual void visit_params(const ParamVisitor& fn) = 0;
  // Parameters the optimizer updates.
  virtual std::vector<Param*> trainable_params();
  // Closed-form models return true and are fitted instead of trained.
  virtual bool closed_form() const { return false; }

  Normalizer normalizer;
};

// Fused graph + sequence model. With use_graph off it is the vanilla
// Transformer: the graph slice is a zero block and the GCN is frozen.
class SebTransformer final : public Regressor {
 public:
  SebTransformer(const ModelConfig& cfg, std::size_t users, std::size_t batteries, bool use_graph, ModelKind kind,
                 Rng& rng);

  ModelKind kind() const override { return kind_; }
  ad::Var forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph& graph,
                         std::size_t t) override;
  void visit_params(const ParamVisitor& fn) override;
  std::vector<Param*> trainable_params() override;

  bool uses_graph() const { return use_graph_; }
  const ModelConfig& config() const { return cfg_; }
  std::size_t fusion_width() const;

  // Node features fed to the first GCN layer: (users + batteries) x gnn_dim.
  ad::Var initial_node_features(ad::Graph& g);
  // Sequence branch for one order: returns {X0 pooled, X2 pooled}.
  std::pair<ad::Var, ad::Var> encode_order(ad::Graph& g, const Order& order);

  Dense input;
  Param position;  // seq_len x d_model
  std::vector<TransformerBlock> blocks;
  Param user_embedding;     // 1 x gnn_dim
  Param battery_embedding;  // 1 x gnn_dim
  Param battery_bias;       // batteries x gnn_dim
  std::vector<GcnLayer> gnn;
  MlpHead fusion;

 private:
  ModelConfig cfg_;
  std::size_t users_;
  std::size_t batteries_;
  bool use_graph_;
  ModelKind kind_;
};

// Flattened standardized telemetry -> hidden ReLU layer -> scalar.
class MlpRegressor final : public Regressor {
 public:
  MlpRegressor(const ModelConfig& cfg, Rng& rng);

  ModelKind kind() const override { return ModelKind::Mlp; }
  ad::Var forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph& graph,
                         std::size_t t) override;
  void visit_params(const ParamVisitor& fn) override;

  MlpHead head;

 private:
  ModelConfig cfg_;
};

// Affine map of the flattened raw telemetry, fitted by damped normal equations.
class LinearRegressor final : public Regressor {
 public:
  explicit LinearRegressor(const ModelConfig& cfg);

  ModelKind kind() const override { return ModelKind::LinearRegression; }
  ad::Var forward_bucket(ad::Graph& g, std::span<const Order* const> orders, const TemporalGraph& graph,
                         std::size_t t) override;
  void visit_params(const ParamVisitor& fn) override;
  std::vector<Param*> trainable_params() override { return {}; }
  bool closed_form() const override { return true; }

  void fit(std::span<const Order* const> orders);

  Param coef;       // (seq_len * features) x 1
  Param intercept;  // 1 x 1

 private:
  ModelConfig cfg_;
};

std::unique_ptr<Regressor> make_model(ModelKind kind, const ModelConfig& cfg, std::size_t users,
                                      std::size_t batteries, std::uint64_t seed);

// Row-major flattening of one order's telemetry into a 1 x (rows * cols) row.
Tensor flatten_telemetry(const Tensor& telemetry);

}  // namespace seb
