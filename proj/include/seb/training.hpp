#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "seb/model.hpp"
#include "seb/s3im.hpp"

namespace seb {

struct Prediction {
  std::size_t t = 0;
  std::vector<double> values;  // km
  std::vector<std::uint64_t> order_ids;
};

struct LabelBatch {
  std::size_t t = 0;
  std::vector<double> values;  // km
};

struct ObjectiveConfig {
  bool use_s3im = false;
  double lambda = 1.0;
  S3imConfig s3im;
};

// Per-timestep term: MSE plus lambda times the similarity regularizer. The
// regularizer is skipped for single-element buckets.
ad::Var objective_term(ad::Var pred, const Tensor& target, const ObjectiveConfig& cfg);
double objective_term_value(std::span<const double> pred, std::span<const double> target,
                            const ObjectiveConfig& cfg);
// Sum of per-timestep terms. preds and labels must list the same timesteps in
// the same order (AlignmentError otherwise).
double objective(std::span<const Prediction> preds, std::span<const LabelBatch> labels, const ObjectiveConfig& cfg);

// Order indices per split; the split is a seeded shuffle of all orders.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

Split split_orders(std::size_t n, double train_frac, double val_frac, double test_frac, std::uint64_t seed);

// timestep -> orders at that timestep, by ascending id
using Buckets = std::map<std::size_t, std::vector<const Order*>>;
Buckets bucket_by_t(std::span<const Order> orders, std::span<const std::size_t> indices);

struct TrainConfig {
  std::size_t epochs = 40;
  // Timestep buckets per optimizer step.
  std::size_t batch_size = 1;
  double lr = 1e-3;
  double train_frac = 0.7;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 42;
  bool use_s3im = false;
  double lambda = 1.0;
  S3imConfig s3im;
  // Replace s3im.L with the training-label range.
  bool auto_range = true;
  // Evaluate the objective on labels z-scored with the training-split mean
  // and sd instead of raw km.
  bool standardize_targets = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  // Mean per-bucket objective, in the units selected by standardize_targets.
  double train_loss = 0.0;  // over the epoch
  double val_loss = 0.0;    // on validation, end of epoch
  double val_mae = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
  S3imConfig s3im;  // as used, with the resolved range
};

// Fits the normalizer on the training split, then runs epochs of Adam over
// shuffled timestep buckets. The parameters with the lowest validation MAE are
// restored at the end. lr = 0 leaves every parameter untouched.
TrainResult train(Regressor& model, const Dataset& data, const Split& split, const TrainConfig& cfg);

struct MaeResult {
  double mean = 0.0;
  double std = 0.0;  // of absolute errors, (n - 1)-normalized
  std::vector<double> residuals;  // prediction - label, in the order of the given indices
};

std::vector<double> predict(Regressor& model, const Dataset& data, std::span<const std::size_t> indices);
MaeResult mae_from_residuals(std::vector<double> residuals);
MaeResult evaluate_mae(Regressor& model, const Dataset& data, std::span<const std::size_t> indices);

}  // namespace seb
