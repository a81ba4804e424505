#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "seb/model.hpp"

namespace seb {

struct CheckpointMeta {
  ModelKind kind = ModelKind::Seb;
  ModelConfig config;
  std::size_t users = 0;
  std::size_t batteries = 0;
  std::uint64_t config_hash = 0;
};

// FNV-1a over the model kind, the model.* entries and the node counts.
std::uint64_t config_hash(ModelKind kind, const ModelConfig& cfg, std::size_t users, std::size_t batteries);

// `#seb-checkpoint v1` text container: metadata, normalizer, then every Param
// as `param <name> <rows> <cols>` followed by one line per row. Values use
// shortest round-trip formatting, so a reload predicts bit-identically.
void save_checkpoint(Regressor& model, const CheckpointMeta& meta, const std::filesystem::path& path);

struct LoadedModel {
  CheckpointMeta meta;
  std::unique_ptr<Regressor> model;
};

// Throws CheckpointMismatch when the stored hash disagrees with the stored
// config or the parameter list does not fit the rebuilt model.
LoadedModel load_checkpoint(const std::filesystem::path& path);

// CheckpointMismatch unless the checkpoint was built for this config and graph size.
void require_compatible(const CheckpointMeta& meta, const ModelConfig& cfg, std::size_t users,
                        std::size_t batteries);

}  // namespace seb
