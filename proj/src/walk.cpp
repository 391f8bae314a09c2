#include "critwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "critwalk/errors.hpp"
#include "critwalk/rng.hpp"

namespace critwalk {

namespace {

inline Vertex step_from(const Graph& g, Vertex x, CounterRng& rng) {
  const auto offsets = g.offsets();
  const auto begin = offsets[x];
  const auto deg = static_cast<std::uint64_t>(offsets[x + 1] - begin);
  return g.adjacency()[static_cast<std::size_t>(begin) + rng.below(deg)];
}

void require_vertex(const Graph& g, Vertex v, const char* what) {
  if (!g.contains(v)) throw InvalidArgument(std::string(what) + " vertex out of range");
}

}  // namespace

WalkTrace walk(const Graph& g, Vertex start, std::int64_t n_steps, std::uint64_t seed,
               std::span<const int> radii) {
  require_vertex(g, start, "start");
  if (n_steps < 0) throw InvalidArgument("n_steps must be >= 0");
  const int margin = g.truncation_margin(start);
  if (margin != kNoFrontier && n_steps >= margin)
    throw InvalidArgument("walk of " + std::to_string(n_steps) + " steps could reach the truncation "
                          "frontier at distance " + std::to_string(margin));
  const auto root_dist = bfs_distances(g, g.root());

  WalkTrace tr;
  tr.start = start;
  tr.seed = seed;
  tr.steps.reserve(static_cast<std::size_t>(n_steps) + 1);
  std::vector<std::uint8_t> seen(g.num_vertices(), 0);
  for (int r : radii) tr.exit_times.emplace_back(r, -1);

  CounterRng rng(seed);
  Vertex x = start;
  std::int64_t measure = 0, size = 0;
  int ymax = 0;
  for (std::int64_t k = 0;; ++k) {
    tr.steps.push_back(x);
    if (!seen[x]) {
      seen[x] = 1;
      measure += g.degree(x);
      ++size;
    }
    ymax = std::max(ymax, root_dist[x]);
    tr.range_measure.push_back(measure);
    tr.range_size.push_back(size);
    tr.max_displacement.push_back(ymax);
    for (auto& [r, tau] : tr.exit_times)
      if (tau < 0 && root_dist[x] >= r) tau = k;
    if (k == n_steps) break;
    x = step_from(g, x, rng);
  }
  return tr;
}

void write_trace_binary(std::ostream& os, const WalkTrace& trace) {
  for (Vertex v : trace.steps) {
    const auto u = static_cast<std::uint32_t>(v);
    const char bytes[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                           static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
    os.write(bytes, 4);
  }
}

WalkEngine::WalkEngine(const Graph& g)
    : g_(g),
      root_dist_(bfs_distances(g, g.root())),
      root_margin_(g.truncation_margin(g.root())),
      stamp_(g.num_vertices(), 0) {}

WalkEngine::Profile WalkEngine::profile(Vertex start, std::span<const std::int64_t> checkpoints,
                                        std::uint64_t seed) {
  require_vertex(g_, start, "start");
  if (checkpoints.empty()) return {};
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) || checkpoints.front() < 0)
    throw InvalidArgument("checkpoints must be nondecreasing and nonnegative");
  const std::int64_t n = checkpoints.back();
  const int margin = start == g_.root() ? root_margin_ : g_.truncation_margin(start);
  if (margin != kNoFrontier && n >= margin)
    throw InvalidArgument("walk of " + std::to_string(n) + " steps could reach the truncation frontier");
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  Profile out;
  CounterRng rng(seed);
  Vertex x = start;
  std::int64_t measure = 0, size = 0;
  int ymax = 0;
  std::size_t next = 0;
  for (std::int64_t k = 0; next < checkpoints.size(); ++k) {
    if (stamp_[x] != epoch_) {
      stamp_[x] = epoch_;
      measure += g_.degree(x);
      ++size;
    }
    ymax = std::max(ymax, root_dist_[x]);
    while (next < checkpoints.size() && checkpoints[next] == k) {
      out.range_measure.push_back(measure);
      out.range_size.push_back(size);
      out.max_displacement.push_back(ymax);
      ++next;
    }
    if (next == checkpoints.size()) break;
    x = step_from(g_, x, rng);
  }
  return out;
}

WalkEngine::ExitTime WalkEngine::exit_time(Vertex start, int radius, std::int64_t cap,
                                           std::uint64_t seed) const {
  require_vertex(g_, start, "start");
  if (radius < 1) throw InvalidArgument("radius must be >= 1");
  if (root_margin_ != kNoFrontier && radius > root_margin_)
    throw InvalidArgument("ball of radius " + std::to_string(radius) +
                          " is not inside the truncation (margin " + std::to_string(root_margin_) +
                          ")");
  if (cap < radius) throw InvalidArgument("censoring cap below the radius: tau_R >= R always");
  const int* rd = root_dist_.data();
  const std::int64_t* off = g_.offsets().data();
  const Vertex* adj = g_.adjacency().data();
  CounterRng rng(seed);
  Vertex x = start;
  std::int64_t t = 0;
  while (rd[x] < radius) {
    if (t == cap) return {cap, true};
    const std::int64_t o = off[x];
    x = adj[o + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(off[x + 1] - o)))];
    ++t;
  }
  return {t, false};
}

std::int64_t default_exit_cap(int radius) {
  const auto r = static_cast<std::int64_t>(radius);
  return 64 * r * r * r;
}

ExitTimeSamples exit_time_samples(const Graph& g, Vertex start, int radius, std::size_t trials,
                                  std::int64_t cap, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (cap <= 0) cap = default_exit_cap(radius);
  const WalkEngine engine(g);
  ExitTimeSamples out;
  out.radius = radius;
  out.cap = cap;
  RunningStats stats;
  std::vector<double> values;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto e = engine.exit_time(start, radius, cap, derive_seed(seed, t));
    out.times.push_back(e.time);
    if (e.censored) ++out.censored;
    stats.add(static_cast<double>(e.time));
    values.push_back(static_cast<double>(e.time));
  }
  out.mean = stats.mean();
  out.std_error = stats.std_error();
  out.mean_ci = bootstrap_mean_ci(values, derive_seed(seed, 0x6d65616eULL));
  out.median = quantile(values, 0.5);
  out.median_ci = bootstrap_ci(
      std::span<const double>(values),
      [](std::span<const double> s) { return quantile({s.begin(), s.end()}, 0.5); },
      derive_seed(seed, 0x6d6564ULL));
  return out;
}

HeatKernelTable heat_kernel_exact(const Graph& g, Vertex x, int n_max, std::size_t budget) {
  require_vertex(g, x, "source");
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  const std::size_t n = g.num_vertices();
  if (static_cast<double>(n_max + 1) * static_cast<double>(n) > static_cast<double>(budget))
    throw BudgetExceeded("heat kernel table of " + std::to_string(n_max + 1) + " x " +
                         std::to_string(n) + " exceeds the vertex-step budget");
  const int margin = g.truncation_margin(x);
  if (margin != kNoFrontier && n_max >= margin)
    throw InvalidArgument("kernel horizon reaches the truncation frontier");
  HeatKernelTable table;
  table.source = x;
  std::vector<double> prob(n, 0.0), next(n);
  prob[x] = 1.0;
  for (int k = 0;; ++k) {
    std::vector<double> dens(n);
    for (std::size_t y = 0; y < n; ++y) dens[y] = prob[y] / g.degree(static_cast<Vertex>(y));
    table.density.push_back(std::move(dens));
    if (k == n_max) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v) {
      if (prob[v] == 0.0) continue;
      const double share = prob[v] / g.degree(v);
      for (Vertex w : g.neighbors(v)) next[w] += share;
    }
    prob.swap(next);
  }
  return table;
}

ReturnSeries return_probability_series(const Graph& g, Vertex x, int n_max, int radius) {
  require_vertex(g, x, "source");
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  if (radius < 1) throw InvalidArgument("radius must be >= 1");
  const int margin = g.truncation_margin(x);
  if (margin != kNoFrontier && radius > margin)
    throw InvalidArgument("ball of radius " + std::to_string(radius) +
                          " is not inside the truncation (margin " + std::to_string(margin) + ")");

  // Ball members in BFS order; layer_end[d] = number of members at distance <= d.
  std::vector<Vertex> order{x};
  std::vector<std::int32_t> slot(g.num_vertices(), -1);
  slot[x] = 0;
  std::vector<std::size_t> layer_end{1};
  for (int d = 1; d < radius; ++d) {
    const std::size_t begin = d == 1 ? 0 : layer_end[d - 2];
    const std::size_t end = layer_end[d - 1];
    for (std::size_t i = begin; i < end; ++i)
      for (Vertex w : g.neighbors(order[i]))
        if (slot[w] < 0) {
          slot[w] = static_cast<std::int32_t>(order.size());
          order.push_back(w);
        }
    layer_end.push_back(order.size());
    if (layer_end[d] == layer_end[d - 1]) break;  // finite graph exhausted
  }
  while (static_cast<int>(layer_end.size()) < radius) layer_end.push_back(order.size());

  // Compact adjacency: -1 marks a neighbour at distance `radius` (killed).
  const std::size_t m = order.size();
  std::vector<std::size_t> adj_off(m + 1, 0);
  std::vector<std::int32_t> adj;
  std::vector<double> inv_deg(m);
  for (std::size_t i = 0; i < m; ++i) {
    inv_deg[i] = 1.0 / g.degree(order[i]);
    for (Vertex w : g.neighbors(order[i])) adj.push_back(slot[w]);
    adj_off[i + 1] = adj.size();
  }

  // On a bipartite ball the mass at step k sits on layers of k's parity only.
  bool bipartite = true;
  auto layer_of = [&](std::size_t i) {
    return static_cast<int>(std::upper_bound(layer_end.begin(), layer_end.end(), i) - layer_end.begin());
  };
  for (std::size_t i = 0; i < m && bipartite; ++i) {
    const int d = layer_of(i);
    for (std::size_t a = adj_off[i]; a < adj_off[i + 1]; ++a)
      if (adj[a] >= 0 && layer_of(static_cast<std::size_t>(adj[a])) == d) {
        bipartite = false;
        break;
      }
  }

  ReturnSeries out;
  out.source = x;
  out.radius = radius;
  const double mu_x = g.degree(x);
  std::vector<double> prob(m, 0.0), next(m, 0.0), killed_by;
  prob[0] = 1.0;
  double killed = 0.0;
  for (int k = 0;; ++k) {
    out.value.push_back(prob[0] / mu_x);
    killed_by.push_back(killed);
    const int back = k - radius;
    out.bound.push_back(back >= 0 ? killed_by[back] / mu_x : 0.0);
    if (k == n_max) break;
    const std::size_t active = layer_end[std::min(k, radius - 1)];
    // Sources are every vertex that can hold mass at step k; `next` is all
    // zero on entry, and the sources are cleared again before the swap.
    auto spread = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double share = prob[i] * inv_deg[i];
        if (share == 0.0) continue;
        for (std::size_t a = adj_off[i]; a < adj_off[i + 1]; ++a) {
          const auto j = adj[a];
          if (j >= 0)
            next[j] += share;
          else
            killed += share;
        }
      }
      std::fill(prob.begin() + static_cast<std::ptrdiff_t>(begin),
                prob.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
      out.vertex_steps += end - begin;
    };
    if (bipartite) {
      const int top = std::min(k, radius - 1);
      for (int d = k % 2; d <= top; d += 2) spread(d == 0 ? 0 : layer_end[d - 1], layer_end[d]);
    } else {
      spread(0, active);
    }
    prob.swap(next);
  }
  return out;
}

ReturnEstimate return_prob_mc(const Graph& g, Vertex x, int n, std::size_t trials,
                              std::uint64_t seed) {
  require_vertex(g, x, "source");
  if (n < 0) throw InvalidArgument("n must be >= 0");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  const int margin = g.truncation_margin(x);
  if (margin != kNoFrontier && n >= margin)
    throw InvalidArgument("2n-step return walk could reach the truncation frontier");
  const auto dist = bfs_distances(g, x, n);
  ReturnEstimate est;
  est.trials = trials;
  const std::int64_t steps = 2 * static_cast<std::int64_t>(n);
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng(derive_seed(seed, t));
    Vertex y = x;
    bool alive = true;
    for (std::int64_t k = 0; k < steps; ++k) {
      y = step_from(g, y, rng);
      const int dy = dist[y];
      if (dy == kUnreachable || dy > steps - k - 1) {
        alive = false;  // too far to come back in time
        break;
      }
    }
    if (alive && y == x) ++est.returns;
  }
  const double mu = g.degree(x);
  const double freq = static_cast<double>(est.returns) / static_cast<double>(trials);
  est.value = freq / mu;
  est.std_error = std::sqrt(freq * (1.0 - freq) / static_cast<double>(trials)) / mu;
  const Interval w = wilson_interval(est.returns, trials);
  est.ci = {w.lo / mu, w.hi / mu};
  return est;
}

}  // namespace critwalk
