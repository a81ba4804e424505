#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "seb/model.hpp"
#include "seb/training.hpp"

namespace seb {

// (baseline - candidate) / baseline * 100
double relative_improvement_pct(double baseline_mae, double candidate_mae);

struct BenchmarkRow {
  ModelKind kind = ModelKind::Seb;
  MaeResult test;
  TrainResult training;
  std::unique_ptr<Regressor> model;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  Split split;

  const BenchmarkRow& row(ModelKind kind) const;
  // SEB-Transformer* against the vanilla Transformer.
  double improvement_pct() const;
};

// Trains one model of `kind` on the split. The objective uses the similarity
// term only for SebS3im.
BenchmarkRow train_and_evaluate(ModelKind kind, const Dataset& data, const Split& split, const ModelConfig& mcfg,
                                const TrainConfig& tcfg);

// Every kind on identical splits and seeds.
BenchmarkResult run_benchmark(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                              std::span<const ModelKind> kinds = kAllModelKinds);

// model,mae_mean,mae_std,improvement_vs_transformer_pct
std::string mae_csv(const BenchmarkResult& r);
// epoch,train_loss,val_loss
std::string loss_csv(const TrainResult& r);
std::string improvement_line(const BenchmarkResult& r);

}  // namespace seb
