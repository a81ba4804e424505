#include "seb/linear_regression.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "seb/error.hpp"

namespace seb {

double LinearFit::predict(std::span<const double> x) const {
  if (x.size() != coef.size()) {
    throw ShapeError("linear model has " + std::to_string(coef.size()) + " coefficients, got " +
                     std::to_string(x.size()) + " features");
  }
  double s = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) s += coef[i] * x[i];
  return s;
}

LinearFit fit_linear_regression(const Tensor& X, std::span<const double> y, double ridge) {
  if (X.rank() != 2) throw ShapeError("design matrix must be rank 2, got " + shape_to_string(X.shape()));
  const std::size_t n = X.rows(), p = X.cols();
  if (n == 0) throw ConfigError("cannot fit a linear model on zero samples");
  if (y.size() != n) {
    throw ShapeError("design matrix has " + std::to_string(n) + " rows but " + std::to_string(y.size()) + " labels");
  }
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> Xm(X.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const Eigen::Map<const Eigen::VectorXd> ym(y.data(), static_cast<Eigen::Index>(n));

  const Eigen::RowVectorXd x_mean = Xm.colwise().mean();
  const double y_mean = ym.mean();
  const Eigen::MatrixXd Xc = Xm.rowwise() - x_mean;
  const Eigen::VectorXd yc = ym.array() - y_mean;

  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = Xc.transpose() * yc;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("normal equations are not positive definite even with ridge " + std::to_string(ridge));
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !w.allFinite()) {
    throw NumericError("damped normal equations produced a non-finite solution");
  }

  LinearFit fit;
  fit.coef.assign(w.data(), w.data() + w.size());
  fit.intercept = y_mean - x_mean.dot(w);
  if (!std::isfinite(fit.intercept)) throw NumericError("non-finite intercept");
  return fit;
}

}  // namespace seb
