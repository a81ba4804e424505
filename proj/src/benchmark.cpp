#include "seb/benchmark.hpp"

#include <cstdio>

#include "seb/error.hpp"
#include "text_util.hpp"

namespace seb {

double relative_improvement_pct(double baseline_mae, double candidate_mae) {
  if (!(baseline_mae > 0.0)) throw ConfigError("baseline MAE must be positive");
  return (baseline_mae - candidate_mae) / baseline_mae * 100.0;
}

const BenchmarkRow& BenchmarkResult::row(ModelKind kind) const {
  for (const BenchmarkRow& r : rows) {
    if (r.kind == kind) return r;
  }
  throw LookupError("benchmark has no row for " + std::string(to_string(kind)));
}

double BenchmarkResult::improvement_pct() const {
  return relative_improvement_pct(row(ModelKind::Transformer).test.mean, row(ModelKind::SebS3im).test.mean);
}

BenchmarkRow train_and_evaluate(ModelKind kind, const Dataset& data, const Split& split, const ModelConfig& mcfg,
                                const TrainConfig& tcfg) {
  BenchmarkRow row;
  row.kind = kind;
  row.model = make_model(kind, mcfg, data.graph.num_users(), data.graph.num_batteries(), tcfg.seed);
  TrainConfig cfg = tcfg;
  cfg.use_s3im = kind == ModelKind::SebS3im;
  row.training = train(*row.model, data, split, cfg);
  row.test = evaluate_mae(*row.model, data, split.test);
  return row;
}

BenchmarkResult run_benchmark(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                              std::span<const ModelKind> kinds) {
  tcfg.validate();
  BenchmarkResult out;
  out.split = split_orders(data.orders.size(), tcfg.train_frac, tcfg.val_frac, tcfg.test_frac, tcfg.seed);
  for (ModelKind k : kinds) out.rows.push_back(train_and_evaluate(k, data, out.split, mcfg, tcfg));
  return out;
}

std::string mae_csv(const BenchmarkResult& r) {
  const BenchmarkRow* base = nullptr;
  for (const BenchmarkRow& row : r.rows) {
    if (row.kind == ModelKind::Transformer) base = &row;
  }
  std::string out = "model,mae_mean,mae_std,improvement_vs_transformer_pct\n";
  for (const BenchmarkRow& row : r.rows) {
    out += std::string(to_string(row.kind)) + ',';
    text::append_double(out, row.test.mean);
    out += ',';
    text::append_double(out, row.test.std);
    out += ',';
    if (base != nullptr) text::append_double(out, relative_improvement_pct(base->test.mean, row.test.mean));
    out += '\n';
  }
  return out;
}

std::string loss_csv(const TrainResult& r) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const EpochRecord& e : r.history) {
    out += std::to_string(e.epoch) + ',';
    text::append_double(out, e.train_loss);
    out += ',';
    text::append_double(out, e.val_loss);
    out += '\n';
  }
  return out;
}

std::string improvement_line(const BenchmarkResult& r) {
  const double t = r.row(ModelKind::Transformer).test.mean;
  const double s = r.row(ModelKind::SebS3im).test.mean;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "SEB-Transformer* improves MAE over Transformer by %.2f%% (%.4f -> %.4f)",
                r.improvement_pct(), t, s);
  return buf;
}

}  // namespace seb
