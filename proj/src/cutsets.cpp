#include "critwalk/cutsets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "critwalk/errors.hpp"
#include "critwalk/resistance.hpp"
#include "critwalk/rng.hpp"

namespace critwalk {

namespace {

void require_levels(const ClusterGraph& cluster) {
  if (!cluster.graph.has_levels()) throw InvalidArgument("cluster has no level labels");
}

}  // namespace

std::vector<Vertex> level_set(const ClusterGraph& cluster, int R) {
  require_levels(cluster);
  std::vector<Vertex> out;
  const auto& lv = cluster.graph.levels();
  for (Vertex v = 0; static_cast<std::size_t>(v) < lv.size(); ++v)
    if (lv[v] == R) out.push_back(v);
  return out;
}

std::vector<OrientedEdge> cut_set(const ClusterGraph& cluster, int n, int R) {
  require_levels(cluster);
  if (n < 1 || n > R || R > cluster.truncation_level)
    throw InvalidArgument("cut set needs 0 < n <= R <= truncation level (n=" + std::to_string(n) +
                          ", R=" + std::to_string(R) + ", truncation " +
                          std::to_string(cluster.truncation_level) + ")");
  const Graph& g = cluster.graph;
  const auto& lv = g.levels();
  std::vector<std::uint8_t> seen(g.num_vertices(), 0);
  std::vector<Vertex> queue = level_set(cluster, R);
  for (Vertex v : queue) seen[v] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head)
    for (Vertex w : g.neighbors(queue[head]))
      if (!seen[w] && lv[w] >= n) {
        seen[w] = 1;
        queue.push_back(w);
      }
  std::vector<OrientedEdge> out;
  for (const auto& [tail, tip] : cluster.oriented_edges)
    if (lv[tip] == n && seen[tip]) out.emplace_back(tail, tip);
  std::sort(out.begin(), out.end());
  return out;
}

CutSetReport cutset_bound(const ClusterGraph& cluster, int R, bool with_exact) {
  if (R < 1 || R > cluster.truncation_level)
    throw InvalidArgument("R must lie in [1, truncation level]");
  const auto top = level_set(cluster, R);
  if (top.empty())
    throw InvalidArgument("root is not connected to level " + std::to_string(R) +
                          "; the conditioning was violated");
  CutSetReport rep;
  rep.R = R;
  for (int n = 1; n <= R; ++n) {
    const auto d = cut_set(cluster, n, R);
    if (d.empty()) throw std::logic_error("empty cut set below a reached level");
    rep.sizes.push_back(static_cast<std::int64_t>(d.size()));
    rep.lower_bound += 1.0 / static_cast<double>(d.size());
  }
  if (with_exact) {
    const Vertex src[] = {cluster.graph.root()};
    rep.exact_resistance = effective_resistance(cluster.graph, src, top).value;
    rep.has_exact = true;
    if (rep.lower_bound > rep.exact_resistance + 1e-9)
      throw std::logic_error("cut-set bound " + std::to_string(rep.lower_bound) +
                             " exceeds the effective resistance " +
                             std::to_string(rep.exact_resistance));
  }
  return rep;
}

ClusterGraph oriented_cluster(std::size_t num_vertices, std::span<const OrientedEdge> arcs,
                              Vertex root, int truncation_level) {
  std::vector<std::vector<Vertex>> out(num_vertices);
  std::vector<Edge> edges;
  for (const auto& [u, v] : arcs) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_vertices ||
        static_cast<std::size_t>(v) >= num_vertices)
      throw InvalidArgument("arc endpoint out of range");
    out[u].push_back(v);
    edges.push_back({u, v});
  }
  std::vector<int> level(num_vertices, -1);
  level.at(root) = 0;
  std::vector<Vertex> queue{root};
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (Vertex w : out[queue[h]])
      if (level[w] < 0) {
        level[w] = level[queue[h]] + 1;
        queue.push_back(w);
      }
  for (const auto& [u, v] : arcs)
    if (level[u] < 0 || level[v] != level[u] + 1)
      throw InvalidArgument("arcs must join consecutive levels of vertices reachable from the root");
  std::vector<std::uint8_t> frontier(num_vertices, 0);
  for (std::size_t v = 0; v < num_vertices; ++v)
    if (level[v] >= truncation_level) frontier[v] = 1;
  return {Graph(num_vertices, edges, root, level, {}, std::move(frontier)),
          {arcs.begin(), arcs.end()},
          truncation_level,
          {},
          {}};
}

ClusterGraph oriented_path_fixture(int length) {
  if (length < 1) throw InvalidArgument("path length must be >= 1");
  std::vector<OrientedEdge> arcs;
  for (Vertex v = 0; v < length; ++v) arcs.emplace_back(v, v + 1);
  return oriented_cluster(static_cast<std::size_t>(length) + 1, arcs, 0, length);
}

ClusterGraph diamond_fixture(bool with_extra_arc) {
  // 0 = root, 1 = a, 2 = b, 3 = c, 4 = d
  std::vector<OrientedEdge> arcs{{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  if (with_extra_arc) arcs.emplace_back(1, 4);
  return oriented_cluster(with_extra_arc ? 5 : 4, arcs, 0, 2);
}

std::pair<std::int64_t, double> ball_volume_and_resistance(const Graph& g, int R) {
  if (R < 1) throw InvalidArgument("R must be >= 1");
  const int margin = g.truncation_margin(g.root());
  if (margin != kNoFrontier && R > margin)
    throw InvalidArgument("B(root, " + std::to_string(R) + ") is not inside the truncation (margin " +
                          std::to_string(margin) + ")");
  const Ball b = ball(g, g.root(), R);
  if (b.members.size() == g.num_vertices())
    throw InvalidArgument("B(root, R) is the whole graph; its complement is empty");
  const auto inside = to_mask(g, b.members);
  const double reff = resistance_to_complement(g, g.root(), inside);
  if (reff > R * (1.0 + kResistanceSlack))
    throw std::logic_error("R_eff(0, B(R)^c) = " + std::to_string(reff) + " exceeds R = " +
                           std::to_string(R));
  return {b.volume, reff};
}

JReport evaluate_J(int R, double lambda, std::int64_t volume, double resistance) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  JReport rep;
  rep.R = R;
  rep.lambda = lambda;
  rep.volume = volume;
  rep.resistance = resistance;
  const double r2 = static_cast<double>(R) * R;
  const auto v = static_cast<double>(volume);
  rep.vol_upper = v <= lambda * r2;
  rep.vol_lower = v * lambda >= r2;
  rep.res_lower = resistance >= R / lambda - kResistanceSlack * R;
  rep.in_J = rep.vol_upper && rep.vol_lower && rep.res_lower;
  return rep;
}

JReport check_J(const Graph& g, int R, double lambda) {
  const auto [volume, reff] = ball_volume_and_resistance(g, R);
  return evaluate_J(R, lambda, volume, reff);
}

std::vector<JSample> sample_j_statistics(const IICSampleSpec& spec, int R, std::size_t trials,
                                         std::uint64_t seed) {
  std::vector<JSample> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto env = sample_environment(spec, derive_seed(seed, t), R);
    const auto [volume, reff] = ball_volume_and_resistance(env.graph, R);
    out.push_back({volume, reff});
  }
  return out;
}

std::vector<PLambdaEstimate> p_lambda_from_samples(std::span<const JSample> samples, int R,
                                                   std::span<const double> lambdas) {
  if (samples.empty()) throw InvalidArgument("no samples");
  std::vector<PLambdaEstimate> out;
  const double n = static_cast<double>(samples.size());
  for (double lambda : lambdas) {
    PLambdaEstimate est;
    est.lambda = lambda;
    est.trials = samples.size();
    std::size_t up = 0, low = 0, res = 0;
    for (const auto& s : samples) {
      const auto j = evaluate_J(R, lambda, s.volume, s.resistance);
      up += !j.vol_upper;
      low += !j.vol_lower;
      res += !j.res_lower;
      est.failures += !j.in_J;
    }
    est.fraction = static_cast<double>(est.failures) / n;
    est.ci = wilson_interval(est.failures, samples.size());
    est.vol_upper_fail = static_cast<double>(up) / n;
    est.vol_lower_fail = static_cast<double>(low) / n;
    est.res_lower_fail = static_cast<double>(res) / n;
    out.push_back(est);
  }
  return out;
}

std::vector<PLambdaEstimate> estimate_p_lambda(const IICSampleSpec& spec, int R,
                                               std::span<const double> lambdas,
                                               std::size_t trials, std::uint64_t seed) {
  if (trials < 30) throw InvalidArgument("estimate_p_lambda needs at least 30 trials");
  const auto samples = sample_j_statistics(spec, R, trials, seed);
  return p_lambda_from_samples(samples, R, lambdas);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw InvalidArgument("bins must be >= 1");
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.width = *hi > *lo ? (*hi - *lo) / static_cast<double>(bins) : 1.0;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - h.lo) / h.width);
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

double VolumeMoments::lower_tail(double lambda) const {
  if (volumes.empty()) return 0.0;
  const double r2 = static_cast<double>(R) * R;
  const auto below = std::count_if(volumes.begin(), volumes.end(),
                                   [&](std::int64_t v) { return static_cast<double>(v) < lambda * r2; });
  return static_cast<double>(below) / static_cast<double>(volumes.size());
}

VolumeMoments volume_moments(std::span<const std::int64_t> volumes, int R, double b0,
                             std::uint64_t seed, std::size_t bins) {
  if (volumes.empty()) throw InvalidArgument("no volumes");
  if (!(b0 > 0.0)) throw InvalidArgument("b0 must be positive");
  VolumeMoments vm;
  vm.R = R;
  vm.trials = volumes.size();
  vm.b0 = b0;
  vm.volumes.assign(volumes.begin(), volumes.end());
  const double r2 = static_cast<double>(R) * R;
  std::vector<double> scaled, inverse;
  for (auto v : volumes) {
    if (v <= 0) throw InvalidArgument("volumes must be positive");
    scaled.push_back(static_cast<double>(v) / r2);
    inverse.push_back(r2 / static_cast<double>(v));
    vm.z.push_back(b0 * static_cast<double>(v) / r2);
  }
  RunningStats s, inv;
  for (double x : scaled) s.add(x);
  for (double x : inverse) inv.add(x);
  vm.mean_volume_scaled = s.mean();
  vm.mean_inverse_scaled = inv.mean();
  vm.mean_volume_ci = bootstrap_mean_ci(scaled, derive_seed(seed, 1));
  vm.mean_inverse_ci = bootstrap_mean_ci(inverse, derive_seed(seed, 2));
  vm.jensen_ok = vm.mean_inverse_scaled * vm.mean_volume_scaled >= 1.0 - 1e-12;
  vm.z_histogram = make_histogram(vm.z, bins);
  return vm;
}

VolumeMoments volume_moments(const IICSampleSpec& spec, int R, std::size_t trials,
                             std::uint64_t seed, double b0, std::size_t bins) {
  if (trials < 30) throw InvalidArgument("volume_moments needs at least 30 trials");
  std::vector<std::int64_t> volumes;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto env = sample_environment(spec, derive_seed(seed, t), R);
    const int margin = env.graph.truncation_margin(env.graph.root());
    if (margin != kNoFrontier && R > margin)
      throw std::logic_error("sampled environment is shallower than R");
    volumes.push_back(ball(env.graph, env.graph.root(), R).volume);
  }
  return volume_moments(volumes, R, b0, derive_seed(seed, 0x766f6cULL), bins);
}

}  // namespace critwalk
