#include "seb/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seb/error.hpp"
#include "seb/optimizer.hpp"

namespace seb {

namespace {

constexpr std::uint64_t kSplitTag = 0x5d17;
constexpr std::uint64_t kShuffleTag = 0x5f1e;

Tensor column_of(std::span<const Order* const> orders) {
  Tensor y({orders.size(), 1});
  for (std::size_t i = 0; i < orders.size(); ++i) y[i] = orders[i]->label;
  return y;
}

std::vector<Tensor> snapshot_values(std::span<Param* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Param* p : params) out.push_back(p->value);
  return out;
}

// Maps km to the units the objective is evaluated in.
struct TargetScale {
  double mean = 0.0;
  double scale = 1.0;

  ad::Var apply(ad::Var km) const {
    if (mean == 0.0 && scale == 1.0) return km;
    ad::Graph& g = km.graph();
    return ad::scale(ad::sub(km, g.constant(Tensor(km.value().shape(), mean))), 1.0 / scale);
  }
  Tensor apply(const Tensor& km) const {
    Tensor out = km;
    for (double& v : out.values()) v = (v - mean) / scale;
    return out;
  }
};

struct EvalPass {
  double loss = 0.0;  // mean per-bucket objective
  double mae = 0.0;
};

EvalPass evaluate_buckets(Regressor& model, const Buckets& buckets, const TemporalGraph& graph,
                          const ObjectiveConfig& obj, const TargetScale& ts) {
  EvalPass out;
  double abs_sum = 0.0;
  std::size_t n = 0;
  for (const auto& [t, orders] : buckets) {
    ad::Graph g(false);
    const ad::Var pred = model.forward_bucket(g, orders, graph, t);
    const Tensor y = column_of(orders);
    out.loss += objective_term_value(ts.apply(pred.value()).values(), ts.apply(y).values(), obj);
    for (std::size_t i = 0; i < orders.size(); ++i) abs_sum += std::abs(pred.value()[i] - y[i]);
    n += orders.size();
  }
  out.loss /= static_cast<double>(buckets.size());
  out.mae = abs_sum / static_cast<double>(n);
  return out;
}

}  // namespace

ad::Var objective_term(ad::Var pred, const Tensor& target, const ObjectiveConfig& cfg) {
  if (pred.value().shape() != target.shape()) {
    throw ShapeError("objective: prediction " + shape_to_string(pred.value().shape()) + " vs label " +
                     shape_to_string(target.shape()));
  }
  ad::Var loss = ad::mse(pred, target);
  if (cfg.use_s3im && target.size() >= 2) {
    loss = ad::add(loss, ad::scale(s3im_regularizer(pred, target, cfg.s3im), cfg.lambda));
  }
  return loss;
}

double objective_term_value(std::span<const double> pred, std::span<const double> target,
                            const ObjectiveConfig& cfg) {
  if (pred.size() != target.size()) {
    throw ShapeError("objective: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(target.size()) + " labels");
  }
  if (pred.empty()) throw ShapeError("objective: empty batch");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sq += (pred[i] - target[i]) * (pred[i] - target[i]);
  double term = sq / static_cast<double>(pred.size());
  if (cfg.use_s3im && pred.size() >= 2) term += cfg.lambda * s3im_regularizer_value(pred, target, cfg.s3im);
  return term;
}

double objective(std::span<const Prediction> preds, std::span<const LabelBatch> labels, const ObjectiveConfig& cfg) {
  if (preds.size() != labels.size()) {
    throw AlignmentError(std::to_string(preds.size()) + " prediction batches vs " + std::to_string(labels.size()) +
                         " label batches");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].t != labels[i].t) {
      throw AlignmentError("prediction batch " + std::to_string(i) + " is for t=" + std::to_string(preds[i].t) +
                           ", labels for t=" + std::to_string(labels[i].t));
    }
    total += objective_term_value(preds[i].values, labels[i].values, cfg);
  }
  return total;
}

Split split_orders(std::size_t n, double train_frac, double val_frac, double test_frac, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, kSplitTag, 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  const double total = train_frac + val_frac + test_frac;
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_frac / total));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_frac / total));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)),
               idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)), idx.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

Buckets bucket_by_t(std::span<const Order> orders, std::span<const std::size_t> indices) {
  Buckets b;
  for (std::size_t i : indices) {
    if (i >= orders.size()) throw IndexError("order index " + std::to_string(i) + " out of range");
    b[orders[i].t].push_back(&orders[i]);
  }
  for (auto& [t, list] : b) {
    std::sort(list.begin(), list.end(), [](const Order* a, const Order* c) { return a->id < c->id; });
  }
  return b;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be a nonnegative number");
  if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0)) throw ConfigError("split fractions must be positive");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be nonnegative");
  if (use_s3im) s3im.validate();
}

TrainResult train(Regressor& model, const Dataset& data, const Split& split, const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty() || split.val.empty()) throw ConfigError("training and validation splits must be nonempty");
  const Buckets train_b = bucket_by_t(data.orders, split.train);
  const Buckets val_b = bucket_by_t(data.orders, split.val);

  std::vector<const Order*> train_orders;
  for (std::size_t i : split.train) train_orders.push_back(&data.orders[i]);
  model.normalizer = Normalizer::fit(train_orders);

  TrainResult result;
  TargetScale ts;
  if (cfg.standardize_targets) ts = {model.normalizer.label_mean, model.normalizer.label_scale};
  ObjectiveConfig obj{cfg.use_s3im, cfg.lambda, cfg.s3im};
  if (cfg.auto_range) {
    const auto [lo, hi] = std::minmax_element(train_orders.begin(), train_orders.end(),
                                              [](const Order* a, const Order* b) { return a->label < b->label; });
    const double range = ((*hi)->label - (*lo)->label) / ts.scale;
    if (range > 0.0) obj.s3im.L = range;
  }
  result.s3im = obj.s3im;

  if (model.closed_form()) {
    auto* lr = dynamic_cast<LinearRegressor*>(&model);
    if (lr == nullptr) throw ContractError("closed-form model without a fitter");
    lr->fit(train_orders);
    EpochRecord rec;
    rec.epoch = 1;
    rec.train_loss = evaluate_buckets(model, train_b, data.graph, obj, ts).loss;
    const EvalPass v = evaluate_buckets(model, val_b, data.graph, obj, ts);
    rec.val_loss = v.loss;
    rec.val_mae = v.mae;
    result.history.push_back(rec);
    result.best_epoch = 1;
    result.best_val_mae = v.mae;
    return result;
  }

  const std::vector<Param*> params = model.trainable_params();
  std::vector<Param*> all;
  model.visit_params([&](const std::string&, Param& p) { all.push_back(&p); });
  OptState state;
  Rng shuffle = Rng::substream(cfg.seed, kShuffleTag, 0);
  std::vector<std::size_t> keys;
  for (const auto& [t, list] : train_b) keys.push_back(t);

  std::vector<Tensor> best = snapshot_values(all);
  result.best_val_mae = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[shuffle.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < keys.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(keys.size(), start + cfg.batch_size);
      for (Param* p : all) p->zero_grad();
      ad::Graph g;
      std::vector<ad::Var> terms;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& orders = train_b.at(keys[k]);
        const ad::Var pred = model.forward_bucket(g, orders, data.graph, keys[k]);
        terms.push_back(objective_term(ts.apply(pred), ts.apply(column_of(orders)), obj));
      }
      const ad::Var loss = terms.size() == 1 ? terms.front() : ad::sum(ad::concat_cols(terms));
      epoch_loss += loss.value().item();
      if (!std::isfinite(loss.value().item())) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      g.backward(loss);
      if (cfg.lr > 0.0) optimizer_step(params, state, cfg.lr);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(keys.size());
    const EvalPass v = evaluate_buckets(model, val_b, data.graph, obj, ts);
    rec.val_loss = v.loss;
    rec.val_mae = v.mae;
    result.history.push_back(rec);
    if (v.mae < result.best_val_mae) {
      result.best_val_mae = v.mae;
      result.best_epoch = epoch;
      best = snapshot_values(all);
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i]->value = best[i];
    all[i]->zero_grad();
  }
  return result;
}

std::vector<double> predict(Regressor& model, const Dataset& data, std::span<const std::size_t> indices) {
  const Buckets buckets = bucket_by_t(data.orders, indices);
  std::map<std::uint64_t, double> by_id;
  for (const auto& [t, orders] : buckets) {
    ad::Graph g(false);
    const ad::Var pred = model.forward_bucket(g, orders, data.graph, t);
    for (std::size_t i = 0; i < orders.size(); ++i) by_id[orders[i]->id] = pred.value()[i];
  }
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(by_id.at(data.orders[i].id));
  return out;
}

MaeResult mae_from_residuals(std::vector<double> residuals) {
  if (residuals.empty()) throw ConfigError("cannot compute MAE over an empty set");
  MaeResult r;
  const double n = static_cast<double>(residuals.size());
  double total = 0.0;
  for (double e : residuals) total += std::abs(e);
  r.mean = total / n;
  if (residuals.size() > 1) {
    double ss = 0.0;
    for (double e : residuals) ss += (std::abs(e) - r.mean) * (std::abs(e) - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  r.residuals = std::move(residuals);
  return r;
}

MaeResult evaluate_mae(Regressor& model, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("cannot evaluate on an empty set");
  const std::vector<double> pred = predict(model, data, indices);
  std::vector<double> residuals;
  residuals.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) residuals.push_back(pred[i] - data.orders[indices[i]].label);
  return mae_from_residuals(std::move(residuals));
}

}  // namespace seb
