#include <doctest.h>

#include <cmath>
#include <functional>

#include "seb/autodiff.hpp"
#include "seb/error.hpp"
#include "seb/grad_check.hpp"
#include "seb/rng.hpp"

using namespace seb;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t({r, c});
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

ad::Var weighted_sum(ad::Var y, const Tensor& w) { return ad::sum(ad::mul(y, y.graph().constant(w))); }

// Runs grad_check at 20 random points of the given shape.
double worst_error(std::size_t rows, std::size_t cols, const std::function<ad::Var(ad::Graph&, ad::Var, Rng&)>& f,
                   std::uint64_t seed) {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng = Rng::substream(seed, 0, i);
    const Tensor x = random_matrix(rows, cols, rng);
    const std::uint64_t fseed = rng.next_u64();
    const auto r = grad_check(
        [&](ad::Graph& g, ad::Var v) {
          Rng local(fseed);
          return f(g, v, local);
        },
        x);
    worst = std::max(worst, r.max_relative_error);
  }
  return worst;
}

}  // namespace

TEST_CASE("grad_check on sum has unit gradient") {
  Rng rng(1);
  const auto r = grad_check([](ad::Graph&, ad::Var x) { return ad::sum(x); }, random_matrix(3, 4, rng));
  CHECK(r.max_relative_error <= 1e-10);
}

TEST_CASE("grad of squared norm is twice the point") {
  ad::Graph g;
  ad::Var x = g.variable(Tensor::matrix({{1, 2, 3}}));
  g.backward(ad::sum(ad::square(x)));
  const Tensor& gx = g.grad(x);
  CHECK(std::abs(gx[0] - 2.0) <= 1e-8);
  CHECK(std::abs(gx[1] - 4.0) <= 1e-8);
  CHECK(std::abs(gx[2] - 6.0) <= 1e-8);
  const auto r = grad_check([](ad::Graph&, ad::Var v) { return ad::sum(ad::square(v)); }, Tensor::matrix({{1, 2, 3}}));
  CHECK(r.max_relative_error <= 1e-8);
}

TEST_CASE("grad_check rejects non-scalar functions") {
  CHECK_THROWS_AS(grad_check([](ad::Graph&, ad::Var x) { return x; }, Tensor({2, 2})), ContractError);
  CHECK_THROWS_AS(grad_check([](ad::Graph&, ad::Var x) { return ad::sum(x); }, Tensor({2, 2}), 0.0), ContractError);
}

TEST_CASE("backward requires a scalar loss") {
  ad::Graph g;
  ad::Var x = g.variable(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(g.backward(x), ContractError);
}

TEST_CASE("no-grad graph records values without gradients") {
  ad::Graph g(false);
  Param p(Tensor::matrix({{2.0}}));
  ad::Var y = ad::square(g.param(p));
  CHECK(y.value()(0, 0) == 4.0);
  CHECK(!y.requires_grad());
}

TEST_CASE("param leaves accumulate into Param::grad") {
  Param p(Tensor::matrix({{1.0, -2.0}}));
  ad::Graph g;
  ad::Var a = g.param(p);
  ad::Var b = g.param(p);
  CHECK(a.id() == b.id());
  g.backward(ad::sum(ad::mul(a, b)));
  CHECK(p.grad[0] == doctest::Approx(2.0));
  CHECK(p.grad[1] == doctest::Approx(-4.0));
}

TEST_CASE("elementwise ops pass gradient checks at 1e-6") {
  CHECK(worst_error(3, 4, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::square(x), random_matrix(3, 4, r)); }, 1) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::relu(x), random_matrix(3, 4, r)); }, 2) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::scale(x, -1.7), random_matrix(3, 4, r)); }, 3) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::mul(x, g.constant(random_matrix(3, 4, r))), random_matrix(3, 4, r));
        }, 4) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::sub(g.constant(random_matrix(3, 4, r)), x), random_matrix(3, 4, r));
        }, 5) <= 1e-6);
  CHECK(worst_error(4, 1, [](ad::Graph&, ad::Var x, Rng& r) { return ad::mse(x, random_matrix(4, 1, r)); }, 6) <= 1e-6);
}

TEST_CASE("row and shape ops pass gradient checks") {
  CHECK(worst_error(1, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::add_row(g.constant(random_matrix(3, 4, r)), x), random_matrix(3, 4, r));
        }, 7) <= 1e-6);
  CHECK(worst_error(1, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::mul_row(g.constant(random_matrix(3, 4, r)), x), random_matrix(3, 4, r));
        }, 8) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::mean_rows(x), random_matrix(1, 4, r)); }, 9) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph&, ad::Var x, Rng&) { return ad::mean(x); }, 10) <= 1e-6);
  CHECK(worst_error(3, 2, [](ad::Graph& g, ad::Var x, Rng& r) {
          const ad::Var parts[] = {x, g.constant(random_matrix(3, 1, r)), x};
          return weighted_sum(ad::concat_cols(parts), random_matrix(3, 5, r));
        }, 11) <= 1e-6);
  CHECK(worst_error(2, 3, [](ad::Graph& g, ad::Var x, Rng& r) {
          const ad::Var parts[] = {x, g.constant(random_matrix(1, 3, r)), x};
          return weighted_sum(ad::concat_rows(parts), random_matrix(5, 3, r));
        }, 12) <= 1e-6);
  CHECK(worst_error(4, 3, [](ad::Graph&, ad::Var x, Rng& r) {
          return weighted_sum(ad::gather_rows(x, {3, 0, 3, 1}), random_matrix(4, 3, r));
        }, 13) <= 1e-6);
  CHECK(worst_error(1, 3, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::repeat_rows(x, 4), random_matrix(4, 3, r)); }, 14) <= 1e-6);
  CHECK(worst_error(2, 6, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::reshape(x, {3, 4}), random_matrix(3, 4, r)); }, 15) <= 1e-6);
}

TEST_CASE("matrix ops pass gradient checks") {
  CHECK(worst_error(3, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::matmul(x, g.constant(random_matrix(4, 2, r))), random_matrix(3, 2, r));
        }, 16) <= 1e-6);
  CHECK(worst_error(4, 2, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::matmul(g.constant(random_matrix(3, 4, r)), x), random_matrix(3, 2, r));
        }, 17) <= 1e-6);
  CHECK(worst_error(3, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::matmul_nt(x, g.constant(random_matrix(5, 4, r))), random_matrix(3, 5, r));
        }, 18) <= 1e-6);
  CHECK(worst_error(5, 4, [](ad::Graph& g, ad::Var x, Rng& r) {
          return weighted_sum(ad::matmul_nt(g.constant(random_matrix(3, 4, r)), x), random_matrix(3, 5, r));
        }, 19) <= 1e-6);
  CHECK(worst_error(3, 5, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::softmax_rows(x), random_matrix(3, 5, r)); }, 20) <= 1e-6);
  CHECK(worst_error(3, 5, [](ad::Graph&, ad::Var x, Rng& r) { return weighted_sum(ad::layer_norm_rows(x), random_matrix(3, 5, r)); }, 21) <= 1e-6);
}

TEST_CASE("neighbor mean gradient and empty neighborhoods") {
  auto lists = std::make_shared<const ad::NeighborLists>(ad::NeighborLists{{2, 3}, {}, {0}, {0, 2}});
  CHECK(worst_error(4, 3, [&](ad::Graph&, ad::Var x, Rng& r) {
          return weighted_sum(ad::neighbor_mean(x, lists), random_matrix(4, 3, r));
        }, 22) <= 1e-6);
  ad::Graph g;
  const Tensor m = ad::neighbor_mean(g.constant(Tensor({4, 2}, 3.0)), lists).value();
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(m(0, 0) == 3.0);
}

TEST_CASE("operations reject mismatched shapes") {
  ad::Graph g;
  ad::Var a = g.constant(Tensor({2, 3}));
  ad::Var b = g.constant(Tensor({3, 2}));
  CHECK_THROWS_AS(ad::add(a, b), ShapeError);
  CHECK_THROWS_AS(ad::matmul(a, a), ShapeError);
  CHECK_THROWS_AS(ad::add_row(a, g.constant(Tensor({1, 2}))), ShapeError);
}
