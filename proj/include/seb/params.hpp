#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "seb/tensor.hpp"

namespace seb {

// Called once per Param with a stable, dotted name (e.g. "gnn.0.W").
using ParamVisitor = std::function<void(const std::string& name, Param& p)>;

inline std::string join_name(std::string_view prefix, std::string_view leaf) {
  if (prefix.empty()) return std::string(leaf);
  return std::string(prefix) + "." + std::string(leaf);
}

}  // namespace seb
