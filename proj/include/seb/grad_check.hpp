#pragma once

#include <functional>
#include <span>
#include <string>

#include "seb/autodiff.hpp"

namespace seb {

struct GradCheckResult {
  // max over coordinates of |analytic - numeric| / max(1, |numeric|)
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using ScalarFn = std::function<ad::Var(ad::Graph&, ad::Var)>;
using LossFn = std::function<ad::Var(ad::Graph&)>;

// Compares the tape gradient of f at `point` with central differences of step h.
// f must return a 1x1 Var; anything else is a ContractError.
GradCheckResult grad_check(const ScalarFn& f, const Tensor& point, double h = 1e-5);

// Same check over every coordinate of every Param; `loss` builds the scalar
// from params bound through Graph::param. Param values are restored afterwards.
GradCheckResult grad_check_params(const LossFn& loss, std::span<Param* const> params, double h = 1e-5);

}  // namespace seb
