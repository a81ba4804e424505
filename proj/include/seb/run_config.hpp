#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seb/model.hpp"
#include "seb/scenario.hpp"
#include "seb/training.hpp"

namespace seb {

// Flat dotted key=value configuration. Every key has a default; unknown keys
// and malformed values are ConfigErrors.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  // Lines of key=value; '#' starts a comment, blank lines are skipped.
  void merge(std::istream& in, const std::string& source);
  void merge_file(const std::filesystem::path& path);
  // "key=value" as given on the command line.
  void merge_override(const std::string& assignment);

  // Sorted key=value lines, one per known key.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& dir) const;

  std::uint64_t seed() const;
  GeneratorConfig generator() const;
  ModelConfig model() const;
  S3imConfig s3im() const;
  bool s3im_auto_range() const;
  // Objective flags are left off; the model kind decides them.
  TrainConfig train() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// model.* entries of cfg in key order; shared by the config file and checkpoints.
std::vector<std::pair<std::string, std::string>> model_config_entries(const ModelConfig& cfg);
ModelConfig model_config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

std::vector<std::string> known_config_keys();

}  // namespace seb
