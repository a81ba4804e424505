#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seb {

struct AuditResult {
  std::string op;
  double tolerance = 0.0;
  double max_error = 0.0;
  std::size_t points = 0;
  std::string worst;  // where the largest error occurred

  bool passed() const { return max_error <= tolerance; }
};

// Operations covered: softmax, layer_norm, mse, gcn, qkv, attention, mlp,
// block, s3im, model.
std::vector<std::string> audit_ops();
double default_tolerance(const std::string& op);

// Central-difference checks at `points` random points. A tolerance override
// applies to every selected op.
AuditResult audit_op(const std::string& op, std::size_t points = 20, std::uint64_t seed = 7,
                     std::optional<double> tolerance = std::nullopt);
std::vector<AuditResult> run_grad_audit(const std::string& op = "all", std::size_t points = 20,
                                        std::uint64_t seed = 7, std::optional<double> tolerance = std::nullopt);

}  // namespace seb
