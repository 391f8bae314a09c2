#include <doctest.h>

#include <sstream>

#include "critwalk/errors.hpp"
#include "critwalk/graph.hpp"
#include "critwalk/iic.hpp"
#include "critwalk/resistance.hpp"
#include "critwalk/rng.hpp"

using namespace critwalk;

namespace {

using LabelEdges = std::vector<std::pair<std::int64_t, std::int64_t>>;

Vertex id(const Graph& g, std::int64_t label) { return *g.find_label(label); }

}  // namespace

TEST_CASE("build_graph degrees") {
  const LabelEdges single{{10, 20}};
  const Graph a = build_graph(single, 10);
  CHECK(a.num_vertices() == 2);
  CHECK(a.degree(id(a, 10)) == 1);
  CHECK(a.degree(id(a, 20)) == 1);

  const LabelEdges path{{1, 2}, {2, 3}};
  const Graph b = build_graph(path, 2);
  CHECK(b.root() == id(b, 2));
  CHECK(b.degree(id(b, 2)) == 2);
  CHECK(b.degree(id(b, 1)) == 1);
  CHECK(b.degree(id(b, 3)) == 1);

  const LabelEdges tri{{1, 2}, {2, 3}, {3, 1}};
  const Graph c = build_graph(tri, 1);
  for (Vertex v = 0; v < 3; ++v) CHECK(c.degree(v) == 2);
}

TEST_CASE("build_graph rejects bad input") {
  const LabelEdges split{{1, 2}, {3, 4}};
  try {
    build_graph(split, 1);
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('4') != std::string::npos);
  }
  const LabelEdges ok{{1, 2}};
  CHECK_THROWS_AS(build_graph(ok, 7), InvalidArgument);
  CHECK_THROWS_AS(build_graph(LabelEdges{}, 1), InvalidArgument);
  const Edge loop[] = {{0, 0}};
  CHECK_THROWS_AS(Graph(1, loop, 0), InvalidArgument);
}

TEST_CASE("parallel edges are kept with multiplicity") {
  const Edge e[] = {{0, 1}, {1, 0}, {1, 2}};
  const Graph g(3, e, 0);
  CHECK(g.degree(0) == 2);
  CHECK(g.degree(1) == 3);
  CHECK(g.num_edges() == 3);
  const auto nb = g.neighbors(1);
  CHECK(std::count(nb.begin(), nb.end(), 0) == 2);
}

TEST_CASE("distances") {
  const Graph p = build_path(3);
  CHECK(distance(p, 0, 2) == 2);
  for (Vertex v = 0; v < 3; ++v) CHECK(distance(p, v, v) == 0);
  const Graph c = build_cycle(4);
  CHECK(distance(c, 0, 2) == 2);
  CHECK(distance(c, 1, 3) == 2);
}

TEST_CASE("balls use strict inequality") {
  const Graph p = build_path(3);
  const Ball b2 = ball(p, 1, 2);
  CHECK(b2.members.size() == 3);
  CHECK(b2.volume == 4);
  const Ball b1 = ball(p, 1, 1);
  CHECK(b1.members == std::vector<Vertex>{1});
  CHECK(b1.volume == 2);
  CHECK_THROWS_AS(ball(p, 1, 0), InvalidArgument);
}

TEST_CASE("integer line ball volume 2(2R-1)") {
  const Graph line = build_line(12);
  for (int R = 1; R <= 10; ++R) CHECK(ball(line, line.root(), R).volume == 2 * (2 * R - 1));
  CHECK(line.truncation_margin(line.root()) == 12);
  CHECK(line.is_frontier(id(line, 12)));
  CHECK(line.is_frontier(id(line, -12)));
}

TEST_CASE("comb fixture") {
  const Graph c = build_comb(2);
  CHECK(c.num_vertices() == 8);
  for (int n = -2; n <= 2; ++n) CHECK(c.find_label(comb_label(n, 0, 2)));
  CHECK(c.find_label(comb_label(1, 1, 2)));
  CHECK(c.find_label(comb_label(2, 1, 2)));
  CHECK(c.find_label(comb_label(2, 2, 2)));
  CHECK_FALSE(c.find_label(comb_label(1, 2, 2)));
  CHECK(comb_coordinates(comb_label(2, 1, 2), 2) == std::pair{2, 1});
  CHECK(c.root() == id(c, comb_label(0, 0, 2)));

  for (int R = 2; R <= 8; ++R) {
    const Graph g = build_comb(4 * R);
    const auto v = static_cast<double>(ball(g, g.root(), R).volume);
    CHECK(v >= R * R / 8.0);
    CHECK(v <= 8.0 * R * R);
    const Ball b = ball(g, g.root(), R);
    const double reff = resistance_to_complement(g, g.root(), to_mask(g, b.members));
    CHECK(reff >= R / 4.0);
  }
}

TEST_CASE("path and cycle fixtures") {
  CHECK(build_cycle(4).num_edges() == 4);
  const Graph p = build_path(3);
  int diam = 0;
  for (Vertex x = 0; x < 3; ++x)
    for (Vertex y = 0; y < 3; ++y) diam = std::max(diam, distance(p, x, y));
  CHECK(diam == 2);
  const Graph c3 = build_cycle(3);
  for (Vertex v = 0; v < 3; ++v) CHECK(c3.degree(v) == 2);
  CHECK_THROWS_AS(build_path(1), InvalidArgument);
  CHECK_THROWS_AS(build_cycle(2), InvalidArgument);
  CHECK_THROWS_AS(build_comb(0), InvalidArgument);
}

TEST_CASE("ball nesting and triangle inequality on fixtures") {
  const Graph fixtures[] = {build_path(9), build_cycle(11), build_line(15), build_comb(6)};
  CounterRng rng(7);
  for (const Graph& g : fixtures) {
    const auto n = g.num_vertices();
    for (Vertex x = 0; static_cast<std::size_t>(x) < n; ++x) {
      for (int r = 1; r < 8; ++r) {
        const Ball a = ball(g, x, r), b = ball(g, x, r + 1);
        CHECK(std::includes(b.members.begin(), b.members.end(), a.members.begin(), a.members.end()));
        CHECK(a.volume <= b.volume);
      }
    }
    for (int t = 0; t < 1000; ++t) {
      const auto x = static_cast<Vertex>(rng.below(n)), y = static_cast<Vertex>(rng.below(n)),
                 z = static_cast<Vertex>(rng.below(n));
      CHECK(distance(g, x, z) <= distance(g, x, y) + distance(g, y, z));
      CHECK(distance(g, x, y) == distance(g, y, x));
    }
  }
}

TEST_CASE("oriented cluster levels equal root distance") {
  LatticeIICSpec spec;
  spec.keep_level = 12;
  spec.survive_level = 24;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c = sample_iic_lattice(spec, s).cluster;
    const auto dist = bfs_distances(c.graph, c.graph.root());
    for (Vertex v = 0; static_cast<std::size_t>(v) < c.graph.num_vertices(); ++v)
      if (c.graph.level(v) < spec.keep_level / 2) CHECK(dist[v] == c.graph.level(v));
  }
  const auto tree = sample_iic_tree({2, 40, 1'000'000}, 3);
  const auto dist = bfs_distances(tree.graph, tree.graph.root());
  for (Vertex v = 0; static_cast<std::size_t>(v) < tree.graph.num_vertices(); ++v)
    CHECK(dist[v] == tree.graph.level(v));
}

TEST_CASE("edge list round trip") {
  const auto tree = sample_iic_tree({2, 10, 1'000'000}, 11);
  std::stringstream ss;
  write_edge_list(ss, tree.graph);
  const Graph back = read_edge_list(ss);
  REQUIRE(back.num_vertices() == tree.graph.num_vertices());
  CHECK(back.num_edges() == tree.graph.num_edges());
  CHECK(back.label(back.root()) == tree.graph.label(tree.graph.root()));
  for (Vertex v = 0; static_cast<std::size_t>(v) < back.num_vertices(); ++v) {
    const Vertex w = id(tree.graph, back.label(v));
    CHECK(back.level(v) == tree.graph.level(w));
    CHECK(back.is_frontier(v) == tree.graph.is_frontier(w));
    CHECK(back.degree(v) == tree.graph.degree(w));
  }

  std::stringstream bad("# root 1\n1 x\n");
  CHECK_THROWS_AS(read_edge_list(bad), InvalidArgument);
}
