#include "seb/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "seb/benchmark.hpp"
#include "seb/checkpoint.hpp"
#include "seb/dataset_io.hpp"
#include "seb/error.hpp"
#include "seb/grad_audit.hpp"
#include "seb/run_config.hpp"
#include "seb/training.hpp"

namespace seb {

namespace {

namespace fs = std::filesystem;

struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.file, "key=value config file");
  cmd->add_option("--set", f.sets, "override one key, e.g. --set train.lr=0.002");
  cmd->add_option("--seed", f.seed, "random seed");
}

// defaults < config file < --set < dedicated flags
RunConfig resolve(const ConfigFlags& f, const std::vector<std::pair<std::string, std::string>>& flag_values) {
  RunConfig rc;
  if (!f.file.empty()) rc.merge_file(f.file);
  for (const std::string& s : f.sets) rc.merge_override(s);
  if (f.seed) rc.set("seed", std::to_string(*f.seed));
  for (const auto& [k, v] : flag_values) rc.set(k, v);
  return rc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

fs::path make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

int cmd_gen(const ConfigFlags& cf, std::optional<std::size_t> orders, const std::string& out_dir, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (orders) flags.emplace_back("gen.orders", std::to_string(*orders));
  const RunConfig rc = resolve(cf, flags);
  const GeneratorConfig gc = rc.generator();
  const Scenario sc = generate(gc);
  const fs::path dir = make_dir(out_dir);
  write_dataset(sc.data, dir);
  rc.write_resolved(dir);
  const std::string summary = format_summary(summarize(sc.data.orders));
  write_text(dir / "summary.txt", summary);
  out << summary;
  return kExitOk;
}

int cmd_train(const ConfigFlags& cf, const std::string& model_name, const std::string& data_dir,
              const std::string& out_dir, std::optional<double> lr, std::optional<std::size_t> epochs,
              std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (lr) flags.emplace_back("train.lr", CLI::detail::to_string(*lr));
  if (epochs) flags.emplace_back("train.epochs", std::to_string(*epochs));
  const RunConfig rc = resolve(cf, flags);
  const ModelKind kind = parse_model_kind(model_name);
  const ModelConfig mc = rc.model();
  const TrainConfig tc = rc.train();
  const Dataset data = read_dataset(data_dir);
  const Split split = split_orders(data.orders.size(), tc.train_frac, tc.val_frac, tc.test_frac, tc.seed);
  BenchmarkRow row = train_and_evaluate(kind, data, split, mc, tc);

  const fs::path dir = make_dir(out_dir);
  rc.write_resolved(dir);
  CheckpointMeta meta{kind, mc, data.graph.num_users(), data.graph.num_batteries(), 0};
  save_checkpoint(*row.model, meta, dir / "model.ckpt");
  write_text(dir / "loss.csv", loss_csv(row.training));
  out << display_name(kind) << ": best epoch " << row.training.best_epoch << ", test MAE "
      << format_fixed(row.test.mean, 4) << " ± " << format_fixed(row.test.std, 4) << " km\n";
  return kExitOk;
}

int cmd_eval(const ConfigFlags& cf, const std::string& ckpt, const std::string& data_dir, const std::string& which,
             std::ostream& out) {
  ConfigFlags flags = cf;
  const fs::path beside = fs::path(ckpt).parent_path() / "config.resolved";
  if (flags.file.empty() && fs::exists(beside)) flags.file = beside.string();
  const RunConfig rc = resolve(flags, {});
  const TrainConfig tc = rc.train();
  const Dataset data = read_dataset(data_dir);
  LoadedModel loaded = load_checkpoint(ckpt);
  require_compatible(loaded.meta, rc.model(), data.graph.num_users(), data.graph.num_batteries());

  std::vector<std::size_t> idx;
  if (which == "all") {
    idx.resize(data.orders.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  } else {
    const Split s = split_orders(data.orders.size(), tc.train_frac, tc.val_frac, tc.test_frac, tc.seed);
    idx = which == "train" ? s.train : which == "val" ? s.val : s.test;
  }
  const MaeResult m = evaluate_mae(*loaded.model, data, idx);
  out << format_fixed(m.mean, 6) << " ± " << format_fixed(m.std, 6) << '\n';
  return kExitOk;
}

int cmd_report(const ConfigFlags& cf, const std::string& data_dir, const std::string& out_dir,
               std::optional<std::size_t> epochs, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> flags;
  if (epochs) flags.emplace_back("train.epochs", std::to_string(*epochs));
  const RunConfig rc = resolve(cf, flags);
  const ModelConfig mc = rc.model();
  const TrainConfig tc = rc.train();
  const Dataset data = data_dir.empty() ? generate(rc.generator()).data : read_dataset(data_dir);
  const BenchmarkResult res = run_benchmark(data, mc, tc);

  const fs::path dir = make_dir(out_dir);
  rc.write_resolved(dir);
  write_text(dir / "mae.csv", mae_csv(res));
  for (const BenchmarkRow& row : res.rows) {
    write_text(dir / ("loss_" + std::string(to_string(row.kind)) + ".csv"), loss_csv(row.training));
  }
  const std::string line = improvement_line(res);
  write_text(dir / "improvement.txt", line + "\n");

  out << "model               MAE (km)\n";
  for (const BenchmarkRow& row : res.rows) {
    std::string name(display_name(row.kind));
    name.resize(20, ' ');
    out << name << format_fixed(row.test.mean, 4) << " ± " << format_fixed(row.test.std, 4) << '\n';
  }
  out << line << '\n';
  return kExitOk;
}

int cmd_gradcheck(const std::string& op, std::optional<double> tolerance, std::size_t points, std::uint64_t seed,
                  std::ostream& out) {
  const std::vector<AuditResult> results = run_grad_audit(op, points, seed, tolerance);
  const AuditResult* worst = nullptr;
  bool ok = true;
  for (const AuditResult& r : results) {
    out << (r.passed() ? "PASS " : "FAIL ") << r.op << " max_rel_error=" << r.max_error << " tol=" << r.tolerance
        << '\n';
    ok = ok && r.passed();
    if (worst == nullptr || r.max_error / r.tolerance > worst->max_error / worst->tolerance) worst = &r;
  }
  if (worst != nullptr) out << "worst: " << worst->op << " " << worst->worst << '\n';
  return ok ? kExitOk : kExitGradAudit;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Battery range prediction: data generation, training and benchmarking", "seb"};
  app.require_subcommand(1);

  ConfigFlags gen_cf, train_cf, eval_cf, report_cf;
  std::optional<std::size_t> gen_orders, train_epochs, report_epochs;
  std::optional<double> train_lr, tolerance;
  std::string gen_out, train_model, train_data, train_out, eval_ckpt, eval_data, eval_split = "test";
  std::string report_data, report_out, audit_op_name = "all";
  std::size_t audit_points = 20;
  std::uint64_t audit_seed = 7;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_config_flags(gen, gen_cf);
  gen->add_option("--orders", gen_orders, "number of orders");
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train one model");
  add_config_flags(tr, train_cf);
  tr->add_option("--model", train_model, "lr|mlp|transformer|seb|seb-s3im")->required();
  tr->add_option("--data", train_data, "dataset directory")->required();
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--lr", train_lr, "learning rate");
  tr->add_option("--epochs", train_epochs, "epochs");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_config_flags(ev, eval_cf);
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  ev->add_option("--data", eval_data, "dataset directory")->required();
  ev->add_option("--split", eval_split, "test|val|train|all")
      ->check(CLI::IsMember({"test", "val", "train", "all"}));

  auto* rep = app.add_subcommand("report", "run the five-model benchmark");
  add_config_flags(rep, report_cf);
  rep->add_option("--data", report_data, "dataset directory (generated from the config when omitted)");
  rep->add_option("--out", report_out, "output directory")->required();
  rep->add_option("--epochs", report_epochs, "epochs");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gc->add_option("--op", audit_op_name, "operation, or all");
  gc->add_option("--tolerance", tolerance, "override every tolerance");
  gc->add_option("--points", audit_points, "random points per operation");
  gc->add_option("--seed", audit_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_cf, gen_orders, gen_out, out);
    if (tr->parsed()) return cmd_train(train_cf, train_model, train_data, train_out, train_lr, train_epochs, out);
    if (ev->parsed()) return cmd_eval(eval_cf, eval_ckpt, eval_data, eval_split, out);
    if (rep->parsed()) return cmd_report(report_cf, report_data, report_out, report_epochs, out);
    if (gc->parsed()) return cmd_gradcheck(audit_op_name, tolerance, audit_points, audit_seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointMismatch& e) {
    err << "checkpoint mismatch: " << e.what() << '\n';
    return kExitCheckpointMismatch;
  } catch (const IoError& e) {
    err << "missing input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const ParseError& e) {
    err << "malformed input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const LookupError& e) {
    err << "input mismatch: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace seb
