#include <doctest.h>

#include <cmath>
#include <vector>

#include "seb/error.hpp"
#include "seb/grad_check.hpp"
#include "seb/rng.hpp"
#include "seb/s3im.hpp"

using namespace seb;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(5.0, 3.0);
  return v;
}

// Straight-line evaluation with its own two-pass moments.
double oracle(const std::vector<double>& x, const std::vector<double>& y, double c1, double c2, double c3) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  const double sx = std::sqrt(vx / (n - 1)), sy = std::sqrt(vy / (n - 1));
  cxy /= n - 1;
  const double r1 = (2 * mx * my + c1) / (mx * mx + my * my + c1);
  const double r2 = (2 * sx * sy + c2) / (sx * sx + sy * sy + c2);
  const double r3 = (cxy + c3) / (sx * sy + c3);
  return r1 * r2 * r3;
}

}  // namespace

TEST_CASE("moments") {
  const std::vector<double> c{2.5, 2.5, 2.5};
  CHECK(moments(c).mu == 2.5);
  CHECK(moments(c).sigma == 0.0);
  const std::vector<double> v{0.0, 2.0};
  CHECK(moments(v).mu == 1.0);
  CHECK(std::abs(moments(v).sigma - std::sqrt(2.0)) <= 1e-15);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(moments(one), SampleSizeError);
  const std::vector<double> a{3, 1, 4, 1, 5}, b{5, 4, 1, 3, 1};
  CHECK(std::abs(moments(a).sigma - moments(b).sigma) <= 1e-15);
  CHECK(moments(a).mu == moments(b).mu);
}

TEST_CASE("stabilizer constants") {
  S3imConfig cfg;
  cfg.L = 10.0;
  CHECK(std::abs(cfg.c1() - 0.01) <= 1e-16);
  CHECK(std::abs(cfg.c2() - 0.09) <= 1e-16);
  CHECK(cfg.c3_value() == cfg.c2() / 2);
  cfg.c1_mode = C1Mode::Linear;
  CHECK(std::abs(cfg.c1() - 0.1) <= 1e-16);
  cfg.c3 = 0.5;
  CHECK(cfg.c3_value() == 0.5);
  S3imConfig bad;
  bad.k1 = 0.2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.alpha = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_s3im_sign("negative"), ConfigError);
}

TEST_CASE("luminance hand values") {
  S3imConfig cfg;
  cfg.k1 = 0.1;  // C1 = 0.01 at L = 1
  const std::vector<double> x{0, 2}, y{2, 4};
  CHECK(std::abs(luminance(x, y, cfg) - 6.01 / 10.01) <= 1e-15);
  CHECK(std::abs(luminance(x, y, cfg) - 0.6004) <= 5e-5);
  const std::vector<double> z{-1, 1};
  CHECK(luminance(z, z, cfg) == 1.0);
  const std::vector<double> w{1, 1, 1}, u{0, 1, 2};
  CHECK(luminance(w, u, cfg) == 1.0);
}

TEST_CASE("contrast hand values") {
  S3imConfig cfg;
  cfg.L = std::sqrt(0.03) / cfg.k2;  // C2 = 0.03
  const std::vector<double> x{-1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  const std::vector<double> y{-std::sqrt(2.0), std::sqrt(2.0)};
  CHECK(std::abs(contrast(x, y, cfg) - 4.03 / 5.03) <= 1e-12);
  CHECK(std::abs(contrast(x, y, cfg) - 0.8012) <= 5e-5);
  const std::vector<double> a{3, 3}, b{7, 7};
  CHECK(contrast(a, b, cfg) == 1.0);
}

TEST_CASE("structure cases") {
  S3imConfig cfg;
  const std::vector<double> x{0, 2}, y{0, 4};
  CHECK(std::abs(structure(x, y, cfg) - 1.0) <= 1e-15);
  const std::vector<double> p{-1, 0, 1}, m{1, 0, -1};
  const double c3 = cfg.c3_value();
  CHECK(std::abs(structure(p, m, cfg) - (c3 - 1.0) / (1.0 + c3)) <= 1e-15);
  CHECK(structure(p, p, cfg) == 1.0);
}

TEST_CASE("shape and sample errors") {
  S3imConfig cfg;
  const std::vector<double> a{1, 2, 3}, b{1, 2}, c{1};
  CHECK_THROWS_AS(s3im(a, b, cfg), ShapeError);
  CHECK_THROWS_AS(s3im(c, c, cfg), SampleSizeError);
  CHECK_THROWS_AS(covariance(a, b), ShapeError);
}

TEST_CASE("three-element example matches the straight-line oracle") {
  S3imConfig cfg;
  const std::vector<double> x{1, 2, 3}, y{3, 2, 1};
  const double v = s3im(x, y, cfg);
  CHECK(v < 1.0);
  CHECK(std::abs(v - oracle(x, y, cfg.c1(), cfg.c2(), cfg.c3_value())) <= 1e-15);
}

TEST_CASE("axioms on random pairs") {
  Rng rng(2024);
  S3imConfig cfg;
  cfg.L = 12.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(255);
    const auto x = random_vec(n, rng), y = random_vec(n, rng);
    const double xy = s3im(x, y, cfg), yx = s3im(y, x, cfg);
    CHECK(std::abs(xy - yx) <= 1e-15);
    CHECK(xy <= 1.0 + 1e-12);
    CHECK(xy < 1.0 - 1e-9);
    CHECK(std::abs(s3im(x, x, cfg) - 1.0) <= 1e-12);
    const S3imTerms t = s3im_terms(x, y, cfg);
    CHECK(std::abs(t.value - t.luminance * t.contrast * t.structure) <= 1e-15);
    CHECK(std::abs(xy - oracle(x, y, cfg.c1(), cfg.c2(), cfg.c3_value())) <= 1e-12);
    CHECK(s3im_regularizer_value(x, y, cfg) >= 0.0);
  }
}

TEST_CASE("regularizer sign options") {
  S3imConfig cfg;
  const std::vector<double> x{1, 4, 2}, y{2, 3, 5};
  CHECK(s3im_regularizer_value(x, x, cfg) == 0.0);
  CHECK(s3im_regularizer_value(x, y, cfg) == 1.0 - s3im(x, y, cfg));
  cfg.sign = S3imSign::Literal;
  CHECK(s3im_regularizer_value(x, y, cfg) == s3im(x, y, cfg));
}

TEST_CASE("non-integer exponent clamps the structure term") {
  S3imConfig cfg;
  cfg.gamma = 0.5;
  const std::vector<double> p{-1, 0, 1}, m{1, 0, -1};
  CHECK(s3im(p, m, cfg) == 0.0);
  const S3imTerms t = s3im_terms(p, m, cfg);
  CHECK(t.structure < 0.0);
}

TEST_CASE("analytic gradient matches finite differences") {
  Rng rng(77);
  for (const double gamma : {1.0, 2.0, 0.5}) {
    S3imConfig cfg;
    cfg.gamma = gamma;
    cfg.L = 8.0;
    for (int i = 0; i < 20; ++i) {
      const std::size_t n = 2 + rng.below(30);
      auto y = random_vec(n, rng);
      auto x = y;
      for (double& v : x) v += rng.normal(0.0, 1.0);
      const std::vector<double> g = s3im_grad_x(x, y, cfg);
      for (std::size_t k = 0; k < n; ++k) {
        const double h = 1e-6;
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const double num = (s3im(xp, y, cfg) - s3im(xm, y, cfg)) / (2 * h);
        CHECK(std::abs(num - g[k]) / std::max(1.0, std::abs(num)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("regularizer op gradient and target isolation") {
  Rng rng(78);
  S3imConfig cfg;
  cfg.L = 10.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 2 + rng.below(16);
    Tensor target({n, 1}), pred({n, 1});
    for (std::size_t k = 0; k < n; ++k) {
      target(k, 0) = rng.normal(5.0, 3.0);
      pred(k, 0) = target(k, 0) + rng.normal();
    }
    const auto r = grad_check([&](ad::Graph&, ad::Var p) { return s3im_regularizer(p, target, cfg); }, pred);
    CHECK(r.max_relative_error <= 1e-6);
  }
  ad::Graph g;
  Tensor t = Tensor::matrix({{1}, {2}, {4}});
  ad::Var p = g.variable(Tensor::matrix({{1}, {2}, {4}}));
  ad::Var loss = s3im_regularizer(p, t, cfg);
  CHECK(loss.value()(0, 0) == 0.0);
  g.backward(loss);
  for (double v : g.grad(p).values()) CHECK(std::abs(v) <= 1e-12);
}
