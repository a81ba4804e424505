#include <doctest.h>

#include <sstream>

#include "seb/error.hpp"
#include "seb/rng.hpp"
#include "seb/temporal_graph.hpp"

using namespace seb;

namespace {

constexpr NodeRef U(std::uint32_t i) { return NodeRef::user(i); }
constexpr NodeRef B(std::uint32_t i) { return NodeRef::battery(i); }

TemporalGraph random_graph(std::size_t users, std::size_t batteries, std::size_t horizon, Rng& rng, double p) {
  TemporalGraph g(users, batteries, horizon);
  for (std::uint32_t t = 0; t < horizon; ++t)
    for (std::uint32_t u = 0; u < users; ++u)
      for (std::uint32_t b = 0; b < batteries; ++b)
        if (rng.uniform() < p) g.add_edge({U(u), B(b), t, static_cast<std::uint32_t>(rng.below(5))});
  return g;
}

}  // namespace

TEST_CASE("add_edge updates adjacency in both directions") {
  TemporalGraph g(2, 2, 2);
  g.add_edge({U(0), B(0), 0, 3});
  CHECK(g.neighbors(B(0), 0) == std::vector<NodeRef>{U(0)});
  CHECK(g.neighbors(U(0), 0) == std::vector<NodeRef>{B(0)});
  CHECK(g.neighbors(B(0), 1).empty());
}

TEST_CASE("add_edge enforces the bipartite constraint and ranges") {
  TemporalGraph g(2, 2, 2);
  CHECK_THROWS_AS(g.add_edge({U(0), U(1), 0, 0}), BipartiteError);
  CHECK_THROWS_AS(g.add_edge({B(0), B(1), 0, 0}), BipartiteError);
  CHECK_THROWS_AS(g.add_edge({B(0), U(1), 0, 0}), BipartiteError);
  CHECK_THROWS_AS(g.add_edge({U(2), B(0), 0, 0}), IndexError);
  CHECK_THROWS_AS(g.add_edge({U(0), B(5), 0, 0}), IndexError);
  CHECK_THROWS_AS(g.add_edge({U(0), B(0), 2, 0}), IndexError);
  g.add_edge({U(0), B(0), 0, 0});
  CHECK_THROWS_AS(g.add_edge({U(0), B(0), 0, 1}), ContractError);
  g.add_edge({U(0), B(0), 1, 0});
  CHECK(g.edge_count() == 2);
}

TEST_CASE("per-snapshot degrees") {
  TemporalGraph g(2, 1, 2);
  g.add_edge({U(0), B(0), 0, 0});
  g.add_edge({U(1), B(0), 1, 0});
  CHECK(g.degree(B(0), 0) == 1);
  CHECK(g.degree(B(0), 1) == 1);
  CHECK_THROWS_AS(g.neighbors(B(0), 2), IndexError);
}

TEST_CASE("star neighborhood is ascending") {
  TemporalGraph g(3, 1, 1);
  g.add_edge({U(2), B(0), 0, 0});
  g.add_edge({U(0), B(0), 0, 0});
  g.add_edge({U(1), B(0), 0, 0});
  CHECK(g.neighbors(B(0), 0) == std::vector<NodeRef>{U(0), U(1), U(2)});
}

TEST_CASE("degree histogram trivial cases") {
  TemporalGraph g(3, 2, 2);
  CHECK(g.degree_histogram(0) == std::map<std::size_t, std::size_t>{{0, 5}});
  g.add_edge({U(1), B(1), 1, 0});
  CHECK(g.degree_histogram(1) == std::map<std::size_t, std::size_t>{{0, 3}, {1, 2}});
}

TEST_CASE("random graphs: histogram recount, degree sums and bipartiteness") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nu = 1 + rng.below(6), nb = 1 + rng.below(6), T = 1 + rng.below(4);
    const TemporalGraph g = random_graph(nu, nb, T, rng, 0.4);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& edges = g.snapshot(t).edges();
      std::vector<std::size_t> deg(nu + nb, 0);
      for (const SwapEdge& e : edges) {
        ++deg[e.user.index];
        ++deg[nu + e.battery.index];
      }
      std::map<std::size_t, std::size_t> expect;
      for (std::size_t d : deg) ++expect[d];
      CHECK(g.degree_histogram(t) == expect);

      std::size_t su = 0, sb = 0, total = 0;
      for (std::uint32_t u = 0; u < nu; ++u) su += g.degree(U(u), t);
      for (std::uint32_t b = 0; b < nb; ++b) sb += g.degree(B(b), t);
      for (const auto& [d, c] : g.degree_histogram(t)) total += c;
      CHECK(su == edges.size());
      CHECK(sb == edges.size());
      CHECK(total == nu + nb);
      for (std::uint32_t u = 0; u < nu; ++u)
        for (NodeRef n : g.neighbors(U(u), t)) CHECK(n.kind == NodeKind::Battery);
    }
  }
}

TEST_CASE("rows place users first then batteries") {
  TemporalGraph g(3, 2, 1);
  CHECK(g.row_of(U(2)) == 2);
  CHECK(g.row_of(B(0)) == 3);
  CHECK(g.node_at(4) == B(1));
  CHECK_THROWS_AS(g.row_of(B(2)), IndexError);
}

TEST_CASE("window adjacency merges past snapshots") {
  TemporalGraph g(2, 2, 3);
  g.add_edge({U(0), B(0), 0, 0});
  g.add_edge({U(0), B(1), 1, 0});
  g.add_edge({U(0), B(0), 2, 0});
  const auto w0 = g.window_adjacency(2, 0);
  CHECK(w0[0] == std::vector<std::uint32_t>{2});
  const auto w2 = g.window_adjacency(2, 2);
  CHECK(w2[0] == std::vector<std::uint32_t>{2, 3});
  CHECK(w2[2] == std::vector<std::uint32_t>{0});
}

TEST_CASE("graph file round-trip is exact") {
  Rng rng(5);
  const TemporalGraph g = random_graph(5, 4, 3, rng, 0.3);
  std::stringstream ss;
  write_graph(g, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("#seb-graph v1\n", 0) == 0);
  std::stringstream in(text);
  const TemporalGraph back = read_graph(in);
  CHECK(back == g);
  std::stringstream again;
  write_graph(back, again);
  CHECK(again.str() == text);
}

TEST_CASE("graph parser reports versions and line numbers") {
  std::stringstream v2("#seb-graph v2\n0,0,0,0\n");
  CHECK_THROWS_AS(read_graph(v2), VersionError);
  std::stringstream bad("#seb-graph v1\n0,0,0,0\n0,1,x,0\n");
  try {
    read_graph(bad);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream dup("#seb-graph v1\n0,0,0,0\n0,0,0,1\n");
  try {
    read_graph(dup);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("without_node_edges drops only that node's edges") {
  TemporalGraph g(2, 2, 2);
  g.add_edge({U(0), B(0), 0, 0});
  g.add_edge({U(1), B(1), 0, 0});
  g.add_edge({U(1), B(0), 1, 0});
  const TemporalGraph h = g.without_node_edges(B(0));
  CHECK(h.edge_count() == 1);
  CHECK(h.degree(B(1), 0) == 1);
  CHECK(h.degree(B(0), 1) == 0);
}
