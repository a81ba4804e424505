#include "seb/s3im.hpp"

#include <algorithm>
#include <cmath>

#include "seb/error.hpp"

namespace seb {

namespace {

bool is_integer(double e) { return std::floor(e) == e; }

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("similarity inputs differ in length: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (x.size() < 2) throw SampleSizeError("similarity needs at least two samples, got " + std::to_string(x.size()));
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// r^e and d(r^e)/dr. Terms raised to a non-integer power are clamped to [0, 1].
std::pair<double, double> power_term(double r, double e) {
  if (e == 0.0) return {1.0, 0.0};
  if (e == 1.0) return {r, 1.0};
  if (is_integer(e)) return {std::pow(r, e), e * std::pow(r, e - 1.0)};
  if (r <= 0.0) return {0.0, 0.0};
  if (r >= 1.0) return {1.0, 0.0};
  return {std::pow(r, e), e * std::pow(r, e - 1.0)};
}

struct Pieces {
  std::size_t n = 0;
  double mu_x = 0, mu_y = 0, sd_x = 0, sd_y = 0, cov = 0;
  double var_x = 0, var_y = 0, sd_xy = 0;
  double r1 = 0, r2 = 0, r3 = 0;
};

Pieces compute(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  check_pair(x, y);
  Pieces p;
  p.n = x.size();
  p.mu_x = mean_of(x);
  p.mu_y = mean_of(y);
  p.var_x = covariance(x, x);
  p.var_y = covariance(y, y);
  p.sd_x = std::sqrt(p.var_x);
  p.sd_y = std::sqrt(p.var_y);
  // sqrt of the product rather than sd_x * sd_y keeps r2 = r3 = 1 exact for x == y
  p.sd_xy = std::sqrt(p.var_x * p.var_y);
  p.cov = covariance(x, y);
  const double c1 = cfg.c1(), c2 = cfg.c2(), c3 = cfg.c3_value();
  p.r1 = (2.0 * p.mu_x * p.mu_y + c1) / (p.mu_x * p.mu_x + p.mu_y * p.mu_y + c1);
  p.r2 = (2.0 * p.sd_xy + c2) / (p.var_x + p.var_y + c2);
  p.r3 = (p.cov + c3) / (p.sd_xy + c3);
  return p;
}

}  // namespace

void S3imConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw ConfigError("s3im exponents must be nonnegative");
  if (!(k1 > 0.0) || k1 > 0.1) throw ConfigError("s3im.k1 must lie in (0, 0.1]");
  if (!(k2 > 0.0) || k2 > 0.1) throw ConfigError("s3im.k2 must lie in (0, 0.1]");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("s3im.L must be positive");
  if (c3 && !(*c3 > 0.0)) throw ConfigError("s3im.c3 must be positive");
}

double S3imConfig::c1() const { return c1_mode == C1Mode::Squared ? (k1 * L) * (k1 * L) : k1 * L; }

double S3imConfig::c2() const { return (k2 * L) * (k2 * L); }

double S3imConfig::c3_value() const { return c3 ? *c3 : c2() / 2.0; }

S3imSign parse_s3im_sign(const std::string& s) {
  if (s == "one_minus") return S3imSign::OneMinus;
  if (s == "literal") return S3imSign::Literal;
  throw ConfigError("s3im.sign must be one_minus or literal, got '" + s + "'");
}

C1Mode parse_c1_mode(const std::string& s) {
  if (s == "squared") return C1Mode::Squared;
  if (s == "linear") return C1Mode::Linear;
  throw ConfigError("s3im.c1_mode must be squared or linear, got '" + s + "'");
}

std::string to_string(S3imSign s) { return s == S3imSign::OneMinus ? "one_minus" : "literal"; }

std::string to_string(C1Mode m) { return m == C1Mode::Squared ? "squared" : "linear"; }

MomentStats moments(std::span<const double> x) {
  if (x.size() < 2) throw SampleSizeError("moments need at least two samples, got " + std::to_string(x.size()));
  const double mu = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return {mu, std::sqrt(ss / static_cast<double>(x.size() - 1)), x.size()};
}

double covariance(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double mx = mean_of(x), my = mean_of(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

double luminance(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  return compute(x, y, cfg).r1;
}

double contrast(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  return compute(x, y, cfg).r2;
}

double structure(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  return compute(x, y, cfg).r3;
}

S3imTerms s3im_terms(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  const Pieces p = compute(x, y, cfg);
  const double value = power_term(p.r1, cfg.alpha).first * power_term(p.r2, cfg.beta).first *
                       power_term(p.r3, cfg.gamma).first;
  return {p.r1, p.r2, p.r3, value};
}

double s3im(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  return s3im_terms(x, y, cfg).value;
}

std::vector<double> s3im_grad_x(std::span<const double> x, std::span<const double> y, const S3imConfig& cfg) {
  const Pieces p = compute(x, y, cfg);
  const double c1 = cfg.c1(), c2 = cfg.c2(), c3 = cfg.c3_value();
  const double n = static_cast<double>(p.n);
  const double nm1 = n - 1.0;

  const auto [f1, d1] = power_term(p.r1, cfg.alpha);
  const auto [f2, d2] = power_term(p.r2, cfg.beta);
  const auto [f3, d3] = power_term(p.r3, cfg.gamma);
  const double dS_dr1 = d1 * f2 * f3;
  const double dS_dr2 = f1 * d2 * f3;
  const double dS_dr3 = f1 * f2 * d3;

  const double n1 = 2.0 * p.mu_x * p.mu_y + c1;
  const double den1 = p.mu_x * p.mu_x + p.mu_y * p.mu_y + c1;
  const double dr1_dmu = (2.0 * p.mu_y * den1 - n1 * 2.0 * p.mu_x) / (den1 * den1);

  const double n2 = 2.0 * p.sd_xy + c2;
  const double den2 = p.var_x + p.var_y + c2;
  const double dr2_dsd = 2.0 * p.sd_y / den2;
  const double dr2_dvar = -n2 / (den2 * den2);

  const double n3 = p.cov + c3;
  const double den3 = p.sd_xy + c3;
  const double dr3_dcov = 1.0 / den3;
  const double dr3_dsd = -n3 * p.sd_y / (den3 * den3);

  const double mu_y = p.mu_y;
  std::vector<double> grad(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const double dx = x[i] - p.mu_x;
    const double dy = y[i] - mu_y;
    // sigma is not differentiable at a constant vector; take the zero subgradient there.
    const double dsd = p.sd_x > 0.0 ? dx / (nm1 * p.sd_x) : 0.0;
    const double dvar = 2.0 * dx / nm1;
    const double g1 = dr1_dmu / n;
    const double g2 = dr2_dsd * dsd + dr2_dvar * dvar;
    const double g3 = dr3_dcov * dy / nm1 + dr3_dsd * dsd;
    grad[i] = dS_dr1 * g1 + dS_dr2 * g2 + dS_dr3 * g3;
  }
  return grad;
}

double s3im_regularizer_value(std::span<const double> pred, std::span<const double> target, const S3imConfig& cfg) {
  const double s = s3im(pred, target, cfg);
  return cfg.sign == S3imSign::OneMinus ? 1.0 - s : s;
}

ad::Var s3im_regularizer(ad::Var pred, const Tensor& target, const S3imConfig& cfg) {
  const Tensor& p = pred.value();
  if (p.size() != target.size()) {
    throw ShapeError("s3im regularizer: prediction " + shape_to_string(p.shape()) + " vs target " +
                     shape_to_string(target.shape()));
  }
  const double value = s3im_regularizer_value(p.values(), target.values(), cfg);
  const std::size_t ip = pred.id();
  return pred.graph().record(Tensor::scalar(value), {pred}, [ip, target, cfg](ad::Graph& g, std::size_t self) {
    if (!g.requires_grad(ip)) return;
    const double gy = g.grad_buffer(self)[0];
    const double sign = cfg.sign == S3imSign::OneMinus ? -1.0 : 1.0;
    const std::vector<double> grad = s3im_grad_x(g.value(ip).values(), target.values(), cfg);
    Tensor& gp = g.grad_buffer(ip);
    for (std::size_t i = 0; i < grad.size(); ++i) gp[i] += sign * gy * grad[i];
  });
}

}  // namespace seb
