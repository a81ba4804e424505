#include "seb/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "seb/error.hpp"

namespace seb {

namespace {

enum class Kind { Count, Real, Flag, Word };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;
};

// Single source of truth for keys and defaults.
constexpr KeySpec kKeys[] = {
    {"seed", Kind::Count, "42"},
    {"gen.orders", Kind::Count, "2000"},
    {"gen.users", Kind::Count, "400"},
    {"gen.batteries", Kind::Count, "120"},
    {"gen.stations", Kind::Count, "20"},
    {"gen.horizon", Kind::Count, "0"},
    {"gen.ride_mean", Kind::Real, "275"},
    {"gen.ride_sd", Kind::Real, "40"},
    {"gen.label_noise", Kind::Real, "0.02"},
    {"gen.sensor_noise", Kind::Real, "1"},
    {"gen.speed_variation", Kind::Real, "1"},
    {"gen.terrain_variation", Kind::Real, "1"},
    {"model.d_model", Kind::Count, "16"},
    {"model.d_qk", Kind::Count, "16"},
    {"model.d_v", Kind::Count, "16"},
    {"model.ffn_hidden", Kind::Count, "32"},
    {"model.blocks", Kind::Count, "1"},
    {"model.residual", Kind::Flag, "true"},
    {"model.layer_norm", Kind::Flag, "true"},
    {"model.gnn_layers", Kind::Count, "2"},
    {"model.gnn_dim", Kind::Count, "16"},
    {"model.gnn_window", Kind::Count, "0"},
    {"model.mlp_hidden", Kind::Count, "32"},
    {"model.flat_hidden", Kind::Count, "32"},
    {"train.epochs", Kind::Count, "40"},
    {"train.batch_size", Kind::Count, "1"},
    {"train.lr", Kind::Real, "0.001"},
    {"train.train_frac", Kind::Real, "0.7"},
    {"train.val_frac", Kind::Real, "0.15"},
    {"train.test_frac", Kind::Real, "0.15"},
    {"train.lambda", Kind::Real, "1"},
    {"train.standardize", Kind::Flag, "false"},
    {"s3im.alpha", Kind::Real, "1"},
    {"s3im.beta", Kind::Real, "1"},
    {"s3im.gamma", Kind::Real, "1"},
    {"s3im.k1", Kind::Real, "0.01"},
    {"s3im.k2", Kind::Real, "0.03"},
    {"s3im.L", Kind::Word, "auto"},
    {"s3im.c3", Kind::Word, "auto"},
    {"s3im.sign", Kind::Word, "one_minus"},
    {"s3im.c1_mode", Kind::Word, "squared"},
};

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& k : kKeys) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t as_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double as_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

bool as_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

void check_word(const std::string& key, const std::string& v) {
  if (key == "s3im.L" || key == "s3im.c3") {
    if (v != "auto") as_real(key, v);
  } else if (key == "s3im.sign") {
    parse_s3im_sign(v);
  } else if (key == "s3im.c1_mode") {
    parse_c1_mode(v);
  }
}

}  // namespace

std::vector<std::string> known_config_keys() {
  std::vector<std::string> out;
  for (const KeySpec& k : kKeys) out.emplace_back(k.key);
  return out;
}

RunConfig::RunConfig() {
  for (const KeySpec& k : kKeys) values_[k.key] = k.fallback;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError("unknown config key '" + key + "'");
  const std::string value = trim(raw);
  switch (spec->kind) {
    case Kind::Count: as_count(key, value); break;
    case Kind::Real: as_real(key, value); break;
    case Kind::Flag: as_flag(key, value); break;
    case Kind::Word: check_word(key, value); break;
  }
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

void RunConfig::merge(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      set(trim(std::string_view(body).substr(0, eq)), body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  merge(in, path.string());
}

void RunConfig::merge_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(std::string_view(assignment).substr(0, eq)), assignment.substr(eq + 1));
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir / "config.resolved", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "config.resolved").string());
  out << resolved();
}

std::uint64_t RunConfig::seed() const { return as_count("seed", get("seed")); }

GeneratorConfig RunConfig::generator() const {
  GeneratorConfig g;
  g.n_orders = as_count("gen.orders", get("gen.orders"));
  g.n_users = as_count("gen.users", get("gen.users"));
  g.n_batteries = as_count("gen.batteries", get("gen.batteries"));
  g.n_stations = as_count("gen.stations", get("gen.stations"));
  g.horizon = as_count("gen.horizon", get("gen.horizon"));
  g.ride_mean = as_real("gen.ride_mean", get("gen.ride_mean"));
  g.ride_sd = as_real("gen.ride_sd", get("gen.ride_sd"));
  g.label_noise = as_real("gen.label_noise", get("gen.label_noise"));
  g.sensor_noise = as_real("gen.sensor_noise", get("gen.sensor_noise"));
  g.speed_variation = as_real("gen.speed_variation", get("gen.speed_variation"));
  g.terrain_variation = as_real("gen.terrain_variation", get("gen.terrain_variation"));
  g.seed = seed();
  return g;
}

std::vector<std::pair<std::string, std::string>> model_config_entries(const ModelConfig& c) {
  auto n = [](std::size_t v) { return std::to_string(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"model.blocks", n(c.blocks)},         {"model.d_model", n(c.d_model)},
      {"model.d_qk", n(c.d_qk)},             {"model.d_v", n(c.d_v)},
      {"model.ffn_hidden", n(c.ffn_hidden)}, {"model.flat_hidden", n(c.flat_hidden)},
      {"model.gnn_dim", n(c.gnn_dim)},       {"model.gnn_layers", n(c.gnn_layers)},
      {"model.gnn_window", n(c.gnn_window)}, {"model.layer_norm", b(c.layer_norm)},
      {"model.mlp_hidden", n(c.mlp_hidden)}, {"model.residual", b(c.residual)},
  };
}

ModelConfig model_config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  RunConfig rc;
  for (const auto& [k, v] : entries) {
    if (k.rfind("model.", 0) != 0) throw ConfigError("'" + k + "' is not a model key");
    rc.set(k, v);
  }
  return rc.model();
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.d_model = as_count("model.d_model", get("model.d_model"));
  m.d_qk = as_count("model.d_qk", get("model.d_qk"));
  m.d_v = as_count("model.d_v", get("model.d_v"));
  m.ffn_hidden = as_count("model.ffn_hidden", get("model.ffn_hidden"));
  m.blocks = as_count("model.blocks", get("model.blocks"));
  m.residual = as_flag("model.residual", get("model.residual"));
  m.layer_norm = as_flag("model.layer_norm", get("model.layer_norm"));
  m.gnn_layers = as_count("model.gnn_layers", get("model.gnn_layers"));
  m.gnn_dim = as_count("model.gnn_dim", get("model.gnn_dim"));
  m.gnn_window = as_count("model.gnn_window", get("model.gnn_window"));
  m.mlp_hidden = as_count("model.mlp_hidden", get("model.mlp_hidden"));
  m.flat_hidden = as_count("model.flat_hidden", get("model.flat_hidden"));
  m.validate();
  return m;
}

S3imConfig RunConfig::s3im() const {
  S3imConfig s;
  s.alpha = as_real("s3im.alpha", get("s3im.alpha"));
  s.beta = as_real("s3im.beta", get("s3im.beta"));
  s.gamma = as_real("s3im.gamma", get("s3im.gamma"));
  s.k1 = as_real("s3im.k1", get("s3im.k1"));
  s.k2 = as_real("s3im.k2", get("s3im.k2"));
  if (get("s3im.L") != "auto") s.L = as_real("s3im.L", get("s3im.L"));
  if (get("s3im.c3") != "auto") s.c3 = as_real("s3im.c3", get("s3im.c3"));
  s.sign = parse_s3im_sign(get("s3im.sign"));
  s.c1_mode = parse_c1_mode(get("s3im.c1_mode"));
  s.validate();
  return s;
}

bool RunConfig::s3im_auto_range() const { return get("s3im.L") == "auto"; }

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.epochs = as_count("train.epochs", get("train.epochs"));
  t.batch_size = as_count("train.batch_size", get("train.batch_size"));
  t.lr = as_real("train.lr", get("train.lr"));
  t.train_frac = as_real("train.train_frac", get("train.train_frac"));
  t.val_frac = as_real("train.val_frac", get("train.val_frac"));
  t.test_frac = as_real("train.test_frac", get("train.test_frac"));
  t.lambda = as_real("train.lambda", get("train.lambda"));
  t.standardize_targets = as_flag("train.standardize", get("train.standardize"));
  t.seed = seed();
  t.s3im = s3im();
  t.auto_range = s3im_auto_range();
  t.validate();
  return t;
}

}  // namespace seb
