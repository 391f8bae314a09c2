#include <doctest.h>

#include <algorithm>
#include <map>

#include "critwalk/errors.hpp"
#include "critwalk/iic.hpp"
#include "critwalk/stats.hpp"
#include "oracles.hpp"

using namespace critwalk;

namespace {

// Open bonds of a sampled lattice cluster with tail level below `keep`, in
// the site indexing of a box of radius L * n.
std::vector<Bond> kept_bonds(const ClusterGraph& c, int d, int L, int n, int keep) {
  const auto probe = OrientedConfig::sample({d, L, 0.5, n, L * n, false}, 0);
  std::vector<Bond> out;
  for (const auto& [u, v] : c.oriented_edges) {
    const int lvl = c.graph.level(u);
    if (lvl >= keep) continue;
    const auto xu = probe.site_coordinates(c.sites[u]);
    const auto xv = probe.site_coordinates(c.sites[v]);
    std::vector<int> e(xu.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = xv[i] - xu[i];
    out.push_back({c.sites[u], lvl, probe.offset_index(e)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("cone bond count") {
  CHECK(cone_bond_count(1, 1, 1) == 3);
  CHECK(cone_bond_count(1, 1, 2) == 12);
  CHECK(cone_bond_count(2, 1, 1) == 9);
  CHECK_THROWS_AS(brute_force_qn(1, 1, 0.5, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(brute_force_qn(1, 1, 0.0, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(brute_force_qn(1, 1, 0.5, 2, 3), InvalidArgument);
}

TEST_CASE("Q_1 is the conditioned product law on the three origin bonds") {
  const auto q = brute_force_qn(1, 1, 0.5, 1, 1);
  CHECK(q.bond_count == 3);
  CHECK(q.survival_probability == doctest::Approx(7.0 / 8.0));
  CHECK(q.outcomes.size() == 7);
  std::map<std::size_t, double> by_size;
  for (const auto& [bonds, prob] : q.outcomes) by_size[bonds.size()] += prob;
  const double binom[] = {1, 3, 3, 1};
  for (std::size_t k = 1; k <= 3; ++k)
    CHECK(by_size[k] == doctest::Approx(binom[k] / 8.0 / (7.0 / 8.0)).epsilon(1e-12));
  CHECK(by_size.count(0) == 0);
  double total = 0.0;
  for (const auto& [bonds, prob] : q.outcomes) total += prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Q_2 survival agrees with the independent enumeration") {
  for (double p : {0.3, 0.5, 0.8})
    CHECK(brute_force_qn(1, 1, p, 2, 1).survival_probability ==
          doctest::Approx(oracle::survival_two_levels(p)).epsilon(1e-12));
}

TEST_CASE("lattice sampler follows Q_2 on the first level") {
  const auto q = brute_force_qn(1, 1, 0.5, 2, 1);
  const LatticeIICSpec spec{1, 1, 0.5, 1, 2, 1'000'000};
  const std::size_t trials = 20000;
  std::map<std::vector<Bond>, std::size_t> counts;
  std::uint64_t attempts = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto s = sample_iic_lattice(spec, derive_seed(77, t));
    attempts += s.attempts;
    CHECK(s.rejections + 1 == s.attempts);
    ++counts[kept_bonds(s.cluster, 1, 1, 2, 1)];
  }
  for (const auto& [bonds, prob] : q.outcomes) {
    const double freq = static_cast<double>(counts[bonds]) / trials;
    CHECK(std::abs(freq - prob) <= 4 * std::sqrt(prob * (1 - prob) / trials));
  }
  // mean number of attempts is 1 / theta_2
  const double mean_attempts = static_cast<double>(attempts) / trials;
  CHECK(mean_attempts == doctest::Approx(1.0 / q.survival_probability).epsilon(0.05));
}

TEST_CASE("lattice sampler validation and budget") {
  CHECK_THROWS_AS(sample_iic_lattice({1, 1, 0.5, 4, 7, 10}, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_iic_lattice({1, 1, 0.0, 1, 2, 50}, 1), BudgetExceeded);
  const auto s = sample_iic_lattice({1, 1, 0.6, 5, 10, 100000}, 4);
  CHECK(s.cluster.truncation_level == 5);
  CHECK(s.cluster.graph.truncation_margin(s.cluster.graph.root()) == 5);
  for (Vertex v = 0; static_cast<std::size_t>(v) < s.cluster.graph.num_vertices(); ++v)
    CHECK(s.cluster.graph.level(v) <= 5);
  const auto again = sample_iic_lattice({1, 1, 0.6, 5, 10, 100000}, 4);
  CHECK(again.cluster.sites == s.cluster.sites);
  CHECK(again.attempts == s.attempts);
}

TEST_CASE("kesten tree structure") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = sample_iic_tree({2, 30, 1'000'000}, seed);
    const Graph& g = t.graph;
    CHECK(g.num_edges() + 1 == g.num_vertices());
    std::vector<int> spine_per_gen(31, 0);
    for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v) {
      if (t.spine[v]) ++spine_per_gen[g.level(v)];
      CHECK(g.is_frontier(v) == (g.level(v) == 30));
      CHECK(g.degree(v) <= 3);
    }
    for (int n : spine_per_gen) CHECK(n == 1);
    for (const auto& [u, v] : t.oriented_edges) {
      CHECK(g.level(v) == g.level(u) + 1);
      if (t.spine[v]) CHECK(t.spine[u]);
    }
    CHECK(g.truncation_margin(g.root()) == 30);
  }
}

TEST_CASE("kesten tree is prefix-consistent in depth") {
  const auto shallow = sample_iic_tree({3, 12, 1'000'000}, 9);
  const auto deep = sample_iic_tree({3, 20, 1'000'000}, 9);
  REQUIRE(deep.graph.num_vertices() >= shallow.graph.num_vertices());
  for (Vertex v = 0; static_cast<std::size_t>(v) < shallow.graph.num_vertices(); ++v) {
    CHECK(deep.graph.level(v) == shallow.graph.level(v));
    CHECK(deep.spine[v] == shallow.spine[v]);
  }
  CHECK(std::vector(deep.oriented_edges.begin(),
                    deep.oriented_edges.begin() + static_cast<long>(shallow.oriented_edges.size())) ==
        shallow.oriented_edges);
}

TEST_CASE("kesten tree generation sizes grow linearly") {
  const int depth = 40;
  const auto exact = oracle::generation_means(2, depth);
  // frozen from the recursion: E|generation n| = 1 + n / 2 for m = 2
  CHECK(exact[40] == doctest::Approx(21.0).epsilon(1e-12));
  CHECK(expected_tree_size(2, depth) ==
        doctest::Approx(std::accumulate(exact.begin(), exact.end(), 0.0)).epsilon(1e-12));

  const int samples = 4000;
  std::vector<RunningStats> gen(depth + 1);
  for (int s = 0; s < samples; ++s) {
    const auto t = sample_iic_tree({2, depth, 1'000'000}, derive_seed(5, s));
    std::vector<int> count(depth + 1, 0);
    for (int lvl : t.graph.levels()) ++count[lvl];
    for (int n = 0; n <= depth; ++n) gen[n].add(count[n]);
  }
  std::vector<double> ns, means;
  for (int n = 0; n <= depth; ++n) {
    CHECK(std::abs(gen[n].mean() - exact[n]) <= 4 * gen[n].std_error() + 1e-12);
    ns.push_back(n);
    means.push_back(gen[n].mean());
  }
  CHECK(least_squares(ns, means).slope == doctest::Approx(0.5).epsilon(0.1));

  const auto m3 = oracle::generation_means(3, 10);
  CHECK(m3[10] == doctest::Approx(1.0 + 10.0 * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tree budget is checked before allocation") {
  CHECK_THROWS_AS(sample_iic_tree({2, 10000, 1000}, 1), BudgetExceeded);
  CHECK_THROWS_AS(sample_iic_tree({1, 10, 1000}, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_iic_tree({2, 0, 1000}, 1), InvalidArgument);
}

TEST_CASE("sample_environment honours the margin") {
  const auto t = sample_environment(TreeIICSpec{2, 5, 1'000'000}, 3, 40);
  CHECK(t.truncation_level == 40);
  const auto l = sample_environment(LatticeIICSpec{1, 1, 0.6, 2, 4, 100000}, 3, 6);
  CHECK(l.truncation_level == 6);
  CHECK(l.graph.truncation_margin(l.graph.root()) >= 6);
}
