#pragma once

#include <optional>
#include <span>
#include <string>

#include "seb/autodiff.hpp"

namespace seb {

enum class S3imSign {
  OneMinus,  // regularizer = 1 - S3IM, zero at a perfect match
  Literal,   // regularizer = S3IM, as summed verbatim into the objective
};

enum class C1Mode {
  Squared,  // C1 = (K1 L)^2
  Linear,   // C1 = K1 L
};

struct S3imConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
  // Dynamic range of the target variable.
  double L = 1.0;
  // Defaults to C2 / 2 when unset.
  std::optional<double> c3;
  S3imSign sign = S3imSign::OneMinus;
  C1Mode c1_mode = C1Mode::Squared;

  void validate() const;
  double c1() const;
  double c2() const;
  double c3_value() const;
};

S3imSign parse_s3im_sign(const std::string& s);
C1Mode parse_c1_mode(const std::string& s);
std::string to_string(S3imSign s);
std::string to_string(C1Mode m);

struct MomentStats {
  double mu = 0.0;
  double sigma = 0.0;  // (n - 1)-normalized
  std::size_t n = 0;
};

// Throws SampleSizeError for fewer than two samples.
MomentStats moments(std::span<const double> x);
// (1 / (n - 1)) * sum (x_i - mu_x)(y_i - mu_y)
double covariance(std::span<const double> x, std::span<const double> y);

double luminance(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);
double contrast(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);
double structure(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);

struct S3imTerms {
  double luminance = 0.0;
  double contrast = 0.0;
  double structure = 0.0;
  double value = 0.0;
};

S3imTerms s3im_terms(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);
// luminance^alpha * contrast^beta * structure^gamma, bounded above by 1.
double s3im(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);
// Gradient of s3im with respect to x.
std::vector<double> s3im_grad_x(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg);

double s3im_regularizer_value(std::span<const double> pred, std::span<const double> target, const S3imConfig& cfg);
// Differentiable loss term; gradients flow into pred only. pred is n x 1 or 1 x n.
ad::Var s3im_regularizer(ad::Var pred, const Tensor& target, const S3imConfig& cfg);

}  // namespace seb
