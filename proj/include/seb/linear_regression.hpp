#pragma once

#include <span>
#include <vector>

#include "seb/tensor.hpp"

namespace seb {

struct LinearFit {
  std::vector<double> coef;
  double intercept = 0.0;

  double predict(std::span<const double> x) const;
};

// Least squares y ~ X w + b with an unpenalized intercept: solves
// (Xc^T Xc + ridge I) w = Xc^T yc on centered data. X is n x p.
// Throws NumericError when the damped system still cannot be solved.
LinearFit fit_linear_regression(const Tensor& X, std::span<const double> y, double ridge = 1e-8);

}  // namespace seb
