#include "critwalk/iic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "critwalk/errors.hpp"
#include "critwalk/rng.hpp"

namespace critwalk {

namespace {

std::vector<double> binomial_pmf(int m) {
  std::vector<double> pmf(m + 1);
  const double q = 1.0 / m;
  for (int k = 0; k <= m; ++k)
    pmf[k] = std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                      k * std::log(q) + (m - k) * std::log1p(-q));
  return pmf;
}

// Inverse-CDF sampling from a finite pmf.
class DiscreteLaw {
 public:
  explicit DiscreteLaw(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double acc = 0.0;
    for (double w : weights) cdf_.push_back(acc += w / total);
    cdf_.back() = 1.0;
  }

  int draw(CounterRng& rng) const {
    const double u = rng.uniform();
    return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end() - 1, u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

LatticeIICSample sample_iic_lattice(const LatticeIICSpec& spec, std::uint64_t seed) {
  if (spec.keep_level < 1) throw InvalidArgument("keep_level must be >= 1");
  if (spec.survive_level < 2 * spec.keep_level)
    throw InvalidArgument("survive_level must be >= 2 * keep_level");
  if (spec.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  const OrientedParams prm{spec.d, spec.L, spec.p, spec.survive_level, spec.L * spec.survive_level,
                           false};
  const SpaceTimePoint origin{std::vector<int>(spec.d, 0), 0};
  for (std::uint64_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const auto cfg = OrientedConfig::sample(prm, derive_seed(seed, attempt));
    if (!survives_to(cfg, spec.survive_level)) continue;
    LatticeIICSample out{forward_cluster(cfg, origin, spec.keep_level), attempt + 1, attempt};
    return out;
  }
  throw BudgetExceeded("no configuration survived to level " + std::to_string(spec.survive_level) +
                       " in " + std::to_string(spec.max_attempts) +
                       " attempts; use a smaller survive_level or a larger p");
}

double expected_tree_size(int m, int depth) {
  // E|generation g| = 1 + g * (1 - 1/m).
  const double extra = 1.0 - 1.0 / m;
  const double d = depth;
  return (d + 1.0) + extra * d * (d + 1.0) / 2.0;
}

ClusterGraph sample_iic_tree(const TreeIICSpec& spec, std::uint64_t seed) {
  if (spec.m < 2) throw InvalidArgument("offspring parameter m must be >= 2");
  if (spec.depth < 1) throw InvalidArgument("tree depth must be >= 1");
  if (expected_tree_size(spec.m, spec.depth) > static_cast<double>(spec.max_vertices))
    throw BudgetExceeded("expected Kesten tree size at depth " + std::to_string(spec.depth) +
                         " exceeds the vertex budget");

  const auto pmf = binomial_pmf(spec.m);
  std::vector<double> biased(pmf.size());
  for (std::size_t k = 0; k < pmf.size(); ++k) biased[k] = static_cast<double>(k) * pmf[k];
  const DiscreteLaw bush_law(pmf);
  const DiscreteLaw spine_law(biased);

  CounterRng rng(seed);
  std::vector<int> levels{0};
  std::vector<std::uint8_t> spine{1};
  std::vector<Edge> edges;
  std::vector<std::pair<Vertex, Vertex>> oriented;
  std::size_t begin = 0;
  for (int gen = 0; gen < spec.depth; ++gen) {
    const std::size_t end = levels.size();
    for (std::size_t v = begin; v < end; ++v) {
      const bool on_spine = spine[v] != 0;
      const int children = on_spine ? spine_law.draw(rng) : bush_law.draw(rng);
      const auto spine_child =
          on_spine ? static_cast<int>(rng.below(static_cast<std::uint64_t>(children))) : -1;
      for (int c = 0; c < children; ++c) {
        const auto child = static_cast<Vertex>(levels.size());
        levels.push_back(gen + 1);
        spine.push_back(c == spine_child ? 1 : 0);
        edges.push_back({static_cast<Vertex>(v), child});
        oriented.emplace_back(static_cast<Vertex>(v), child);
      }
      if (levels.size() > spec.max_vertices)
        throw BudgetExceeded("Kesten tree sample exceeded the vertex budget");
    }
    begin = end;
  }
  const std::size_t n = levels.size();
  std::vector<std::uint8_t> frontier(n, 0);
  for (std::size_t v = begin; v < n; ++v) frontier[v] = 1;

  ClusterGraph out{Graph(n, edges, 0, std::move(levels), {}, std::move(frontier)),
                   std::move(oriented), spec.depth, {}, std::move(spine)};
  return out;
}

ClusterGraph sample_environment(const IICSampleSpec& spec, std::uint64_t seed, int margin) {
  if (const auto* tree = std::get_if<TreeIICSpec>(&spec)) {
    TreeIICSpec t = *tree;
    t.depth = std::max(t.depth, margin);
    return sample_iic_tree(t, seed);
  }
  LatticeIICSpec lat = std::get<LatticeIICSpec>(spec);
  lat.keep_level = std::max(lat.keep_level, margin);
  lat.survive_level = std::max(lat.survive_level, 2 * lat.keep_level);
  return sample_iic_lattice(lat, seed).cluster;
}

std::int64_t cone_bond_count(int d, int L, int n) {
  std::int64_t total = 0;
  const auto per_site = static_cast<std::int64_t>(std::pow(2 * L + 1, d));
  for (int j = 0; j < n; ++j) total += static_cast<std::int64_t>(std::pow(2 * L * j + 1, d)) * per_site;
  return total;
}

double QnDistribution::probability(
    const std::function<bool(const std::vector<Bond>&)>& event) const {
  double total = 0.0;
  for (const auto& [bonds, prob] : outcomes)
    if (event(bonds)) total += prob;
  return total;
}

QnDistribution brute_force_qn(int d, int L, double p, int n, int keep_level) {
  if (n < 1) throw InvalidArgument("survival level n must be >= 1");
  if (keep_level < 0 || keep_level > n) throw InvalidArgument("keep_level must lie in [0, n]");
  const std::int64_t count = cone_bond_count(d, L, n);
  if (count > 24)
    throw InvalidArgument("enumeration domain has " + std::to_string(count) +
                          " bonds; at most 24 are supported");

  // Lay out the light cone: vertices (level, site) and bonds in level order.
  const auto cfg = OrientedConfig::sample({d, L, p, n, L * n, false}, 0);
  struct Node {
    int level;
    std::int64_t site;
  };
  std::vector<Node> nodes;
  std::map<std::pair<int, std::int64_t>, int> node_of;
  auto node_id = [&](int level, std::int64_t site) {
    auto [it, fresh] = node_of.try_emplace({level, site}, static_cast<int>(nodes.size()));
    if (fresh) nodes.push_back({level, site});
    return it->second;
  };
  struct Slot {
    Bond bond;
    int tail;
    int head;
  };
  std::vector<Slot> slots;
  node_id(0, cfg.site_index(std::vector<int>(d, 0)));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node tail = nodes[i];
    if (tail.level >= n) continue;
    for (int o = 0; o < cfg.offsets_per_site(); ++o) {
      const auto head = cfg.step(tail.site, o);
      const int h = node_id(tail.level + 1, *head);
      slots.push_back({{tail.site, tail.level, o}, static_cast<int>(i), h});
    }
  }
  const int nb = static_cast<int>(slots.size());

  QnDistribution dist;
  dist.bond_count = nb;
  std::map<std::uint32_t, double> by_mask;
  std::vector<std::uint8_t> reached(nodes.size());
  double survival = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
    std::fill(reached.begin(), reached.end(), 0);
    reached[0] = 1;
    bool survived = false;
    std::uint32_t kept = 0;
    for (int b = 0; b < nb; ++b) {
      if (!((mask >> b) & 1u) || !reached[slots[b].tail]) continue;
      reached[slots[b].head] = 1;
      if (nodes[slots[b].head].level == n) survived = true;
      if (slots[b].bond.level < keep_level) kept |= 1u << b;
    }
    if (!survived) continue;
    const int open = std::popcount(mask);
    const double w = std::pow(p, open) * std::pow(1.0 - p, nb - open);
    survival += w;
    by_mask[kept] += w;
  }
  if (survival <= 0.0) throw InvalidArgument("survival to level n has probability zero");
  dist.survival_probability = survival;
  for (auto [mask, w] : by_mask) {
    std::vector<Bond> bonds;
    for (int b = 0; b < nb; ++b)
      if ((mask >> b) & 1u) bonds.push_back(slots[b].bond);
    std::sort(bonds.begin(), bonds.end());
    dist.outcomes[bonds] += w / survival;
  }
  return dist;
}

}  // namespace critwalk
