#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seb/checkpoint.hpp"
#include "seb/cli.hpp"
#include "seb/dataset_io.hpp"
#include "seb/run_config.hpp"

using namespace seb;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("seb_test_cli_" + name);
  fs::remove_all(d);
  return d;
}

// Small graph and model so training finishes in well under a second.
const std::vector<std::string> kSmall{"--set", "gen.users=30",     "--set", "gen.batteries=12", "--set",
                                      "gen.horizon=10", "--set", "model.d_model=4", "--set", "model.d_qk=4",
                                      "--set", "model.d_v=4", "--set", "model.gnn_dim=4", "--set", "model.ffn_hidden=6"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("gen is deterministic and writes the dataset") {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  const Result ra = cli(with_small({"gen", "--seed", "42", "--orders", "100", "--out", a.string()}));
  const Result rb = cli(with_small({"gen", "--seed", "42", "--orders", "100", "--out", b.string()}));
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.out.find("ride_length") != std::string::npos);
  for (const char* f : {"orders.seb", "graph.seb", "summary.txt", "config.resolved"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "config.resolved").find("gen.orders=100\n") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config errors exit with 2") {
  CHECK(cli({"gen", "--orders", "0", "--out", fresh_dir("zero").string()}).code == 2);
  CHECK(cli({"gen", "--set", "gen.nonsense=1", "--out", fresh_dir("bad").string()}).code == 2);
  CHECK(cli({"gen", "--config", "/nonexistent/seb.cfg", "--out", fresh_dir("bad").string()}).code != 0);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"train", "--model", "rnn", "--data", "x", "--out", "y"}).code == 2);
}

TEST_CASE("missing dataset exits with 3") {
  const Result r = cli({"train", "--model", "seb", "--data", "/nonexistent/data", "--out", fresh_dir("t3").string()});
  CHECK(r.code == 3);
  CHECK(!r.err.empty());
}

TEST_CASE("train, eval and checkpoint mismatch") {
  const fs::path data = fresh_dir("data"), run1 = fresh_dir("run1"), run2 = fresh_dir("run2");
  REQUIRE(cli(with_small({"gen", "--orders", "100", "--out", data.string()})).code == 0);
  const auto train_args = [&](const fs::path& out) {
    return with_small({"train", "--model", "seb-s3im", "--seed", "42", "--epochs", "2", "--data", data.string(),
                       "--out", out.string()});
  };
  const Result t1 = cli(train_args(run1));
  REQUIRE(t1.code == 0);
  REQUIRE(cli(train_args(run2)).code == 0);
  CHECK(slurp(run1 / "loss.csv") == slurp(run2 / "loss.csv"));
  CHECK(slurp(run1 / "loss.csv").rfind("epoch,train_loss,val_loss\n", 0) == 0);
  CHECK(slurp(run1 / "model.ckpt") == slurp(run2 / "model.ckpt"));

  const Result ev = cli({"eval", "--checkpoint", (run1 / "model.ckpt").string(), "--data", data.string()});
  CHECK(ev.code == 0);
  CHECK(ev.out.find(" ± ") != std::string::npos);

  const Result mismatch = cli(with_small({"eval", "--checkpoint", (run1 / "model.ckpt").string(), "--data",
                                          data.string(), "--set", "model.mlp_hidden=9"}));
  CHECK(mismatch.code == 4);

  const Result lr0 = cli(with_small({"train", "--model", "transformer", "--lr", "0", "--epochs", "1", "--data",
                                     data.string(), "--out", run2.string()}));
  CHECK(lr0.code == 0);
  CHECK(lr0.out.find("Transformer") != std::string::npos);
  LoadedModel trained = load_checkpoint(run2 / "model.ckpt");
  auto fresh = make_model(ModelKind::Transformer, trained.meta.config, 30, 12, 42);
  std::vector<Tensor> a, b;
  trained.model->visit_params([&](const std::string&, Param& p) { a.push_back(p.value); });
  fresh->visit_params([&](const std::string&, Param& p) { b.push_back(p.value); });
  CHECK(a == b);

  fs::remove_all(data);
  fs::remove_all(run1);
  fs::remove_all(run2);
}

TEST_CASE("perfect-label checkpoint evaluates to zero MAE") {
  const fs::path data = fresh_dir("perfect"), ck = fresh_dir("perfect_ck");
  REQUIRE(cli(with_small({"gen", "--orders", "60", "--out", data.string()})).code == 0);
  Dataset d = read_dataset(data);
  for (Order& o : d.orders) o.label = 17.25;
  write_dataset(d, data);

  RunConfig rc;
  for (std::size_t i = 0; i + 1 < kSmall.size(); i += 2) rc.merge_override(kSmall[i + 1]);
  const ModelConfig mc = rc.model();
  auto m = make_model(ModelKind::Seb, mc, 30, 12, 1);
  m->visit_params([](const std::string&, Param& p) { p.value.fill(0.0); });
  dynamic_cast<SebTransformer&>(*m).fusion.layers.back().b.value(0, 0) = 17.25;
  fs::create_directories(ck);
  save_checkpoint(*m, {ModelKind::Seb, mc, 30, 12, 0}, ck / "model.ckpt");
  rc.write_resolved(ck);
  const Result r = cli({"eval", "--checkpoint", (ck / "model.ckpt").string(), "--data", data.string(), "--split",
                        "all"});
  CHECK(r.code == 0);
  CHECK(r.out == "0.000000 ± 0.000000\n");
  fs::remove_all(data);
  fs::remove_all(ck);
}

TEST_CASE("gradcheck exit codes") {
  const Result ok = cli({"gradcheck", "--op", "s3im", "--points", "5"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS s3im") != std::string::npos);
  CHECK(ok.out.find("mlp") == std::string::npos);
  const Result tight = cli({"gradcheck", "--op", "model", "--points", "3", "--tolerance", "1e-12"});
  CHECK(tight.code == 5);
  CHECK(tight.out.find("FAIL model") != std::string::npos);
  CHECK(cli({"gradcheck", "--op", "nonsense"}).code == 2);
}
