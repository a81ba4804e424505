#include <doctest.h>

#include <cmath>

#include "seb/error.hpp"
#include "seb/kernels.hpp"
#include "seb/rng.hpp"

using namespace seb;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = kernels::available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front() == &kernels::scalar_table());
}

TEST_CASE("every kernel table agrees with the scalar reference") {
  const auto& ref = kernels::scalar_table();
  Rng rng(21);
  for (const kernels::KernelTable* t : kernels::available_tables()) {
    INFO(t->name);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t m = 1 + rng.below(13), k = 1 + rng.below(19), n = 1 + rng.below(17);
      const auto a = random_vec(m * k, rng), b = random_vec(k * n, rng), bt = random_vec(n * k, rng);
      const auto at = random_vec(k * m, rng);
      CHECK(std::abs(t->dot(a.data(), b.data(), std::min(a.size(), b.size())) -
                     ref.dot(a.data(), b.data(), std::min(a.size(), b.size()))) <= 1e-12);

      auto y1 = random_vec(k * n, rng);
      auto y2 = y1;
      t->axpy(0.7, b.data(), y1.data(), y1.size());
      ref.axpy(0.7, b.data(), y2.data(), y2.size());
      CHECK(max_diff(y1, y2) <= 1e-14);

      for (bool acc : {false, true}) {
        auto c1 = random_vec(m * n, rng);
        auto c2 = c1;
        t->gemm_nn(a.data(), b.data(), c1.data(), m, k, n, acc);
        ref.gemm_nn(a.data(), b.data(), c2.data(), m, k, n, acc);
        CHECK(max_diff(c1, c2) <= 1e-12);
        t->gemm_nt(a.data(), bt.data(), c1.data(), m, k, n, acc);
        ref.gemm_nt(a.data(), bt.data(), c2.data(), m, k, n, acc);
        CHECK(max_diff(c1, c2) <= 1e-12);
        t->gemm_tn(at.data(), b.data(), c1.data(), m, k, n, acc);
        ref.gemm_tn(at.data(), b.data(), c2.data(), m, k, n, acc);
        CHECK(max_diff(c1, c2) <= 1e-12);
      }
    }
  }
}

TEST_CASE("scalar gemm matches a plain triple loop") {
  const auto& ref = kernels::scalar_table();
  Rng rng(4);
  const std::size_t m = 5, k = 7, n = 3;
  const auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
  std::vector<double> c(m * n);
  ref.gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(std::abs(c[i * n + j] - s) <= 1e-14);
    }
}

TEST_CASE("select switches the active table") {
  const auto& before = kernels::active();
  kernels::select(kernels::Backend::Scalar);
  CHECK(&kernels::active() == &kernels::scalar_table());
  if (kernels::avx2_table() != nullptr) {
    kernels::select(kernels::Backend::Avx2);
    CHECK(&kernels::active() == kernels::avx2_table());
  } else {
    CHECK_THROWS_AS(kernels::select(kernels::Backend::Avx2), ConfigError);
  }
  kernels::select(before.backend);
}
