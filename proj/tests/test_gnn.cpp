#include <doctest.h>

#include <cmath>
#include <numeric>

#include "seb/error.hpp"
#include "seb/gnn.hpp"
#include "seb/grad_check.hpp"

using namespace seb;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t({r, c});
  for (double& v : t.values()) v = rng.normal();
  return t;
}

TemporalGraph random_graph(std::size_t nu, std::size_t nb, Rng& rng) {
  TemporalGraph g(nu, nb, 1);
  for (std::uint32_t u = 0; u < nu; ++u)
    for (std::uint32_t b = 0; b < nb; ++b)
      if (rng.uniform() < 0.4) g.add_edge({NodeRef::user(u), NodeRef::battery(b), 0, 0});
  return g;
}

// act(D^-1 A H W + H B) with a dense adjacency matrix, 0^-1 := 0.
Tensor dense_oracle(const TemporalGraph& g, const Tensor& H, const Tensor& W, const Tensor& Bm, Activation act) {
  const std::size_t N = g.num_nodes();
  std::vector<double> A(N * N, 0.0);
  for (const SwapEdge& e : g.snapshot(0).edges()) {
    const std::size_t u = g.row_of(e.user), b = g.row_of(e.battery);
    A[u * N + b] = 1.0;
    A[b * N + u] = 1.0;
  }
  Tensor P({N, H.cols()});
  for (std::size_t i = 0; i < N; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < N; ++j) deg += A[i * N + j];
    const double inv = deg > 0.0 ? 1.0 / deg : 0.0;
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t c = 0; c < H.cols(); ++c) P(i, c) += inv * A[i * N + j] * H(j, c);
  }
  Tensor out({N, W.cols()});
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t o = 0; o < W.cols(); ++o) {
      double s = 0.0;
      for (std::size_t c = 0; c < H.cols(); ++c) s += P(i, c) * W(c, o) + H(i, c) * Bm(c, o);
      out(i, o) = act == Activation::ReLU ? std::max(0.0, s) : s;
    }
  return out;
}

Tensor forward(GcnLayer& layer, const Tensor& H, const TemporalGraph& g) {
  ad::Graph gr(false);
  return gcn_layer_forward(layer, gr.constant(H), g.snapshot(0)).value();
}

}  // namespace

TEST_CASE("isolated node with identity activation gives h B") {
  Rng rng(1);
  TemporalGraph g(2, 2, 1);
  g.add_edge({NodeRef::user(0), NodeRef::battery(0), 0, 0});
  GcnLayer layer(3, 2, Activation::Identity, rng);
  layer.B.value = random_matrix(3, 2, rng);
  const Tensor H = random_matrix(4, 3, rng);
  const Tensor out = forward(layer, H, g);
  const Tensor hb = matmul(H, layer.B.value);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(out(1, c) == hb(1, c));
    CHECK(out(3, c) == hb(3, c));
  }
}

TEST_CASE("single edge with identity weights sums both endpoints") {
  TemporalGraph g(1, 1, 1);
  g.add_edge({NodeRef::user(0), NodeRef::battery(0), 0, 0});
  Rng rng(2);
  GcnLayer layer(2, 2, Activation::Identity, rng);
  layer.W.value = Tensor::identity(2);
  layer.B.value = Tensor::identity(2);
  const Tensor H = Tensor::matrix({{1.5, -2.0}, {0.25, 4.0}});
  const Tensor out = forward(layer, H, g);
  CHECK(out(0, 0) == 1.75);
  CHECK(out(0, 1) == 2.0);
  CHECK(out(1, 0) == 1.75);
  CHECK(out(1, 1) == 2.0);
}

TEST_CASE("layer matches the dense normalized-adjacency formula") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nu = 1 + rng.below(4), nb = 1 + rng.below(4);
    const TemporalGraph g = random_graph(nu, nb, rng);
    const Activation act = trial % 2 ? Activation::ReLU : Activation::Identity;
    GcnLayer layer(3, 2, act, rng);
    layer.B.value = random_matrix(3, 2, rng);
    const Tensor H = random_matrix(nu + nb, 3, rng);
    CHECK(max_abs_diff(forward(layer, H, g), dense_oracle(g, H, layer.W.value, layer.B.value, act)) <= 1e-10);
  }
}

TEST_CASE("relabeling nodes permutes output rows") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nu = 1 + rng.below(4), nb = 1 + rng.below(4);
    const TemporalGraph g = random_graph(nu, nb, rng);
    std::vector<std::uint32_t> pu(nu), pb(nb);
    std::iota(pu.begin(), pu.end(), 0U);
    std::iota(pb.begin(), pb.end(), 0U);
    for (std::size_t i = nu; i > 1; --i) std::swap(pu[i - 1], pu[rng.below(i)]);
    for (std::size_t i = nb; i > 1; --i) std::swap(pb[i - 1], pb[rng.below(i)]);
    TemporalGraph h(nu, nb, 1);
    for (const SwapEdge& e : g.snapshot(0).edges())
      h.add_edge({NodeRef::user(pu[e.user.index]), NodeRef::battery(pb[e.battery.index]), 0, 0});
    GcnLayer layer(3, 3, Activation::ReLU, rng);
    layer.B.value = random_matrix(3, 3, rng);
    const Tensor H = random_matrix(nu + nb, 3, rng);
    Tensor Hp({nu + nb, 3});
    auto perm_row = [&](std::size_t r) { return r < nu ? pu[r] : nu + pb[r - nu]; };
    for (std::size_t r = 0; r < nu + nb; ++r)
      for (std::size_t c = 0; c < 3; ++c) Hp(perm_row(r), c) = H(r, c);
    const Tensor out = forward(layer, H, g), outp = forward(layer, Hp, h);
    double worst = 0.0;
    for (std::size_t r = 0; r < nu + nb; ++r)
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(outp(perm_row(r), c) - out(r, c)));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("a non-neighbor row does not influence a node") {
  Rng rng(6);
  TemporalGraph g(3, 2, 1);
  g.add_edge({NodeRef::user(0), NodeRef::battery(0), 0, 0});
  g.add_edge({NodeRef::user(1), NodeRef::battery(1), 0, 0});
  GcnLayer layer(2, 2, Activation::ReLU, rng);
  const Tensor H = random_matrix(5, 2, rng);
  Tensor H2 = H;
  H2(1, 0) += 3.0;  // user 1 is not adjacent to battery 0 (row 3)
  H2(2, 1) -= 1.0;  // isolated user 2
  const Tensor a = forward(layer, H, g), b = forward(layer, H2, g);
  CHECK(a(3, 0) == b(3, 0));
  CHECK(a(3, 1) == b(3, 1));
  CHECK(a(0, 0) == b(0, 0));
}

TEST_CASE("row-count mismatch is a shape error") {
  Rng rng(7);
  TemporalGraph g(2, 2, 1);
  GcnLayer layer(2, 2, Activation::ReLU, rng);
  ad::Graph gr;
  CHECK_THROWS_AS(gcn_layer_forward(layer, gr.constant(Tensor({3, 2})), g.snapshot(0)), ShapeError);
}

TEST_CASE("gnn_encode composes layers and validates dims") {
  Rng rng(8);
  TemporalGraph g(2, 2, 1);
  g.add_edge({NodeRef::user(0), NodeRef::battery(0), 0, 0});
  g.add_edge({NodeRef::user(1), NodeRef::battery(0), 0, 0});
  g.add_edge({NodeRef::user(1), NodeRef::battery(1), 0, 0});
  GnnConfig cfg;
  cfg.num_layers = 2;
  cfg.dims = {3, 4, 2};
  auto layers = make_gcn_stack(cfg, rng);
  CHECK(layers[0].activation == Activation::ReLU);
  CHECK(layers[1].activation == Activation::Identity);
  const Tensor H = random_matrix(4, 3, rng);
  ad::Graph gr(false);
  const Tensor out = gnn_encode(cfg, layers, g, gr.constant(H), 0).value();
  const Tensor manual = forward(layers[1], forward(layers[0], H, g), g);
  CHECK(max_abs_diff(out, manual) == 0.0);

  GnnConfig none;
  none.num_layers = 0;
  none.dims = {3};
  std::vector<GcnLayer> empty;
  CHECK(gnn_encode(none, empty, g, gr.constant(H), 0).value() == H);

  GnnConfig broken = cfg;
  broken.dims = {3, 5, 2};
  CHECK_THROWS_AS(gnn_encode(broken, layers, g, gr.constant(H), 0), ConfigError);
  CHECK_THROWS_AS(gnn_encode(cfg, layers, g, gr.constant(H), 1), IndexError);
}

TEST_CASE("empty snapshot with one identity layer gives h B everywhere") {
  Rng rng(9);
  TemporalGraph g(2, 1, 1);
  GnnConfig cfg;
  cfg.num_layers = 1;
  cfg.dims = {2, 2};
  auto layers = make_gcn_stack(cfg, rng);
  const Tensor H = random_matrix(3, 2, rng);
  ad::Graph gr(false);
  CHECK(gnn_encode(cfg, layers, g, gr.constant(H), 0).value() == matmul(H, layers[0].B.value));
}

TEST_CASE("gcn gradients pass the finite-difference check") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const TemporalGraph g = random_graph(3, 3, rng);
    GcnLayer layer(3, 2, Activation::ReLU, rng);
    const Tensor H = random_matrix(6, 3, rng), R = random_matrix(6, 2, rng);
    auto loss = [&](ad::Graph& gr, ad::Var h) {
      return ad::sum(ad::mul(gcn_layer_forward(layer, h, g.snapshot(0)), gr.constant(R)));
    };
    CHECK(grad_check(loss, H).max_relative_error <= 1e-4);
    Param* ps[] = {&layer.W, &layer.B};
    CHECK(grad_check_params([&](ad::Graph& gr) { return loss(gr, gr.constant(H)); }, ps).max_relative_error <= 1e-4);
  }
}
