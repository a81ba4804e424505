#include "seb/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>

#include "seb/error.hpp"
#include "seb/run_config.hpp"
#include "text_util.hpp"

namespace seb {

namespace {

constexpr std::string_view kHeader = "#seb-checkpoint v1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void append_row(std::string& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    text::append_double(out, values[i]);
  }
  out += '\n';
}

std::vector<double> parse_row(const std::string& line, std::size_t expect, std::size_t lineno) {
  const auto cells = text::split(line);
  if (cells.size() != expect) {
    throw ParseError("expected " + std::to_string(expect) + " values, got " + std::to_string(cells.size()), lineno);
  }
  std::vector<double> out;
  out.reserve(expect);
  for (auto c : cells) out.push_back(text::parse_double(c, lineno));
  return out;
}

// Reads `key value` lines, tracking line numbers for errors.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(std::string("checkpoint ends before ") + what, lineno_ + 1);
    ++lineno_;
    return line;
  }

  std::string field(const std::string& key) {
    const std::string line = next(key.c_str());
    if (line.rfind(key + " ", 0) != 0) throw ParseError("expected '" + key + " ...'", lineno_);
    return line.substr(key.size() + 1);
  }

  bool next_if(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++lineno_;
    return true;
  }

  std::size_t line() const { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

}  // namespace

std::uint64_t config_hash(ModelKind kind, const ModelConfig& cfg, std::size_t users, std::size_t batteries) {
  std::string text = "kind=" + std::string(to_string(kind)) + "\n";
  for (const auto& [k, v] : model_config_entries(cfg)) text += k + "=" + v + "\n";
  text += "users=" + std::to_string(users) + "\nbatteries=" + std::to_string(batteries) + "\n";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(Regressor& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  std::string out;
  out += kHeader;
  out += '\n';
  out += "kind " + std::string(to_string(meta.kind)) + '\n';
  out += "config_hash " + hex64(config_hash(meta.kind, meta.config, meta.users, meta.batteries)) + '\n';
  out += "nodes " + std::to_string(meta.users) + ' ' + std::to_string(meta.batteries) + '\n';
  for (const auto& [k, v] : model_config_entries(meta.config)) out += "config " + k + "=" + v + '\n';
  const Normalizer& n = model.normalizer;
  out += "feature_mean ";
  append_row(out, n.feature_mean);
  out += "feature_scale ";
  append_row(out, n.feature_scale);
  out += "label ";
  append_row(out, std::vector<double>{n.label_mean, n.label_scale});
  model.visit_params([&](const std::string& name, Param& p) {
    const Tensor& v = p.value;
    out += "param " + name + ' ' + std::to_string(v.rows()) + ' ' + std::to_string(v.cols()) + '\n';
    for (std::size_t r = 0; r < v.rows(); ++r) append_row(out, v.row_span(r));
  });
  out += "end\n";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << out;
  if (!f) throw IoError("failed writing " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path.string());
  Reader rd(f);
  const std::string head = rd.next("header");
  if (head != kHeader) {
    if (head.rfind("#seb-checkpoint", 0) == 0) throw VersionError("unsupported checkpoint '" + head + "'", 1);
    throw ParseError("not a checkpoint file", 1);
  }
  LoadedModel out;
  CheckpointMeta& meta = out.meta;
  try {
    meta.kind = parse_model_kind(rd.field("kind"));
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), rd.line());
  }
  const std::string hash_text = rd.field("config_hash");
  {
    const auto r = std::from_chars(hash_text.data(), hash_text.data() + hash_text.size(), meta.config_hash, 16);
    if (hash_text.empty() || r.ec != std::errc{} || r.ptr != hash_text.data() + hash_text.size()) {
      throw ParseError("malformed config hash '" + hash_text + "'", rd.line());
    }
  }
  {
    const std::string nodes = rd.field("nodes");
    const auto parts = text::split(nodes, ' ');
    if (parts.size() != 2) throw ParseError("expected 'nodes <users> <batteries>'", rd.line());
    meta.users = text::parse_u64(parts[0], rd.line());
    meta.batteries = text::parse_u64(parts[1], rd.line());
  }
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line = rd.next("config");
  while (line.rfind("config ", 0) == 0) {
    const std::string kv = line.substr(7);
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("malformed config entry", rd.line());
    entries.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    line = rd.next("normalizer");
  }
  try {
    meta.config = model_config_from_entries(entries);
  } catch (const ConfigError& e) {
    throw CheckpointMismatch(std::string("stored config is invalid: ") + e.what());
  }
  if (config_hash(meta.kind, meta.config, meta.users, meta.batteries) != meta.config_hash) {
    throw CheckpointMismatch("config hash " + hash_text + " does not match the stored config");
  }

  out.model = make_model(meta.kind, meta.config, meta.users, meta.batteries, 0);
  Normalizer& n = out.model->normalizer;
  const std::size_t F = meta.config.features;
  if (line.rfind("feature_mean ", 0) != 0) throw ParseError("expected 'feature_mean ...'", rd.line());
  n.feature_mean = parse_row(line.substr(13), F, rd.line());
  n.feature_scale = parse_row(rd.field("feature_scale"), F, rd.line());
  const auto label = parse_row(rd.field("label"), 2, rd.line());
  n.label_mean = label[0];
  n.label_scale = label[1];

  std::map<std::string, Param*> by_name;
  out.model->visit_params([&](const std::string& name, Param& p) { by_name[name] = &p; });
  std::size_t loaded = 0;
  while (true) {
    line = rd.next("end marker");
    if (line == "end") break;
    if (line.rfind("param ", 0) != 0) throw ParseError("expected 'param <name> <rows> <cols>' or 'end'", rd.line());
    const std::string spec = line.substr(6);
    const auto parts = text::split(spec, ' ');
    if (parts.size() != 3) throw ParseError("expected 'param <name> <rows> <cols>'", rd.line());
    const std::string name(parts[0]);
    const std::size_t rows = text::parse_u64(parts[1], rd.line());
    const std::size_t cols = text::parse_u64(parts[2], rd.line());
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointMismatch("checkpoint parameter '" + name + "' is not part of the model");
    Tensor& dst = it->second->value;
    if (dst.rows() != rows || dst.cols() != cols) {
      throw CheckpointMismatch("parameter '" + name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                               " in the checkpoint but " + shape_to_string(dst.shape()) + " in the model");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const auto vals = parse_row(rd.next("parameter row"), cols, rd.line());
      std::copy(vals.begin(), vals.end(), dst.row_span(r).begin());
    }
    ++loaded;
  }
  if (loaded != by_name.size()) {
    throw CheckpointMismatch("checkpoint holds " + std::to_string(loaded) + " of " + std::to_string(by_name.size()) +
                             " parameters");
  }
  return out;
}

void require_compatible(const CheckpointMeta& meta, const ModelConfig& cfg, std::size_t users,
                        std::size_t batteries) {
  const std::uint64_t want = config_hash(meta.kind, cfg, users, batteries);
  if (want != meta.config_hash) {
    throw CheckpointMismatch("checkpoint config hash " + hex64(meta.config_hash) + " differs from " + hex64(want) +
                             " for the current config and dataset");
  }
}

}  // namespace seb
