#pragma once

#include <span>
#include <vector>

#include "seb/rng.hpp"
#include "seb/tensor.hpp"

namespace seb {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one pair per Param, plus the step count.
struct OptState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

// One bias-corrected adaptive-moment update. Gradients are left as they are;
// zeroing them is the caller's job. lr <= 0 is a ConfigError.
void optimizer_step(std::span<Param* const> params, OptState& state, double lr, const AdamConfig& cfg = {});

// Uniform in +-sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace seb
