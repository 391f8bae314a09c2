#include "critwalk/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

#include "critwalk/errors.hpp"
#include "critwalk/rng.hpp"
#include "critwalk/stats.hpp"

namespace critwalk {

namespace {

std::int64_t checked_pow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > std::numeric_limits<std::int64_t>::max() / base / 4)
      throw InvalidArgument("space-time box too large for 64-bit site indices");
    out *= base;
  }
  return out;
}

std::uint64_t explicit_key(std::int64_t site, int level, int offset) {
  return derive_seed(0x6f70656e626f6e64ULL, site, level, offset);
}

}  // namespace

OrientedConfig::OrientedConfig(const OrientedParams& params, std::uint64_t seed)
    : params_(params), seed_(seed) {
  if (params.d < 1) throw InvalidArgument("dimension d must be >= 1");
  if (params.L < 1) throw InvalidArgument("spread L must be >= 1");
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  if (params.horizon < 0) throw InvalidArgument("horizon must be >= 0");
  if (params.box < 0) throw InvalidArgument("box must be >= 0");
  if (!params.allow_boundary_risk &&
      static_cast<std::int64_t>(params.box) < static_cast<std::int64_t>(params.L) * params.horizon)
    throw InvalidArgument("box " + std::to_string(params.box) + " < L * horizon = " +
                          std::to_string(static_cast<std::int64_t>(params.L) * params.horizon) +
                          "; clusters could touch the spatial boundary");
  side_ = 2 * static_cast<std::int64_t>(params.box) + 1;
  const std::int64_t sites = checked_pow(side_, params.d);
  if (sites > std::numeric_limits<std::int64_t>::max() / (params.horizon + 2))
    throw InvalidArgument("space-time box too large for 64-bit labels");
  offsets_per_site_ = static_cast<int>(checked_pow(2 * params.L + 1, params.d));
  offsets_.reserve(offsets_per_site_);
  for (int o = 0; o < offsets_per_site_; ++o) {
    std::vector<int> e(params.d);
    int rest = o;
    std::int64_t shift = 0, stride = 1;
    for (int i = 0; i < params.d; ++i) {
      e[i] = rest % (2 * params.L + 1) - params.L;
      rest /= 2 * params.L + 1;
      shift += e[i] * stride;
      stride *= side_;
    }
    offsets_.push_back(std::move(e));
    offset_shift_.push_back(shift);
  }
}

OrientedConfig OrientedConfig::sample(const OrientedParams& params, std::uint64_t seed) {
  return OrientedConfig(params, seed);
}

OrientedConfig OrientedConfig::from_bonds(const OrientedParams& params, std::span<const Bond> open) {
  OrientedConfig cfg(params, 0);
  cfg.explicit_open_.emplace();
  for (const Bond& b : open) {
    if (b.offset < 0 || b.offset >= cfg.offsets_per_site_)
      throw InvalidArgument("bond offset index out of range");
    cfg.explicit_open_->insert(explicit_key(b.site, b.level, b.offset));
  }
  return cfg;
}

int OrientedConfig::offset_index(std::span<const int> e) const {
  if (static_cast<int>(e.size()) != params_.d) throw InvalidArgument("offset dimension mismatch");
  int idx = 0, stride = 1;
  for (int i = 0; i < params_.d; ++i) {
    if (std::abs(e[i]) > params_.L) throw InvalidArgument("offset exceeds spread L");
    idx += (e[i] + params_.L) * stride;
    stride *= 2 * params_.L + 1;
  }
  return idx;
}

bool OrientedConfig::in_box(std::span<const int> x) const {
  if (static_cast<int>(x.size()) != params_.d) return false;
  return std::all_of(x.begin(), x.end(), [&](int c) { return std::abs(c) <= params_.box; });
}

std::int64_t OrientedConfig::site_index(std::span<const int> x) const {
  if (!in_box(x)) throw InvalidArgument("site outside the spatial box");
  std::int64_t idx = 0, stride = 1;
  for (int i = 0; i < params_.d; ++i) {
    idx += (x[i] + params_.box) * stride;
    stride *= side_;
  }
  return idx;
}

std::vector<int> OrientedConfig::site_coordinates(std::int64_t site) const {
  std::vector<int> x(params_.d);
  for (int i = 0; i < params_.d; ++i) {
    x[i] = static_cast<int>(site % side_) - params_.box;
    site /= side_;
  }
  return x;
}

std::optional<std::int64_t> OrientedConfig::step(std::int64_t site, int offset) const {
  const auto& e = offsets_[offset];
  std::int64_t rest = site;
  for (int i = 0; i < params_.d; ++i) {
    const auto c = static_cast<int>(rest % side_) - params_.box + e[i];
    if (std::abs(c) > params_.box) return std::nullopt;
    rest /= side_;
  }
  return site + offset_shift_[offset];
}

double OrientedConfig::bond_uniform(std::int64_t site, int level, int offset) const noexcept {
  return to_unit(derive_seed(seed_, site, level, offset));
}

bool OrientedConfig::is_open(std::int64_t site, int level, int offset) const {
  if (explicit_open_) return explicit_open_->contains(explicit_key(site, level, offset));
  return bond_uniform(site, level, offset) < params_.p;
}

OrientedConfig OrientedConfig::with_p(double p) const {
  OrientedConfig out(*this);
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  out.params_.p = p;
  return out;
}

ClusterGraph forward_cluster(const OrientedConfig& cfg, const SpaceTimePoint& source,
                             std::optional<int> max_level) {
  const auto& prm = cfg.params();
  if (source.level < 0 || source.level > prm.horizon)
    throw InvalidArgument("source level outside [0, horizon]");
  if (!cfg.in_box(source.x)) throw InvalidArgument("source site outside the spatial box");
  const int cutoff = std::min(max_level.value_or(prm.horizon), prm.horizon);
  if (cutoff < source.level) throw InvalidArgument("max_level below the source level");

  std::vector<int> levels{source.level};
  std::vector<std::int64_t> sites{cfg.site_index(source.x)};
  std::vector<std::pair<Vertex, Vertex>> oriented;
  std::vector<Edge> edges;
  std::vector<Vertex> frontier{0}, next;
  std::unordered_map<std::int64_t, Vertex> seen;
  for (int lvl = source.level; lvl < cutoff && !frontier.empty(); ++lvl) {
    next.clear();
    seen.clear();
    for (Vertex v : frontier) {
      const std::int64_t site = sites[v];
      for (int o = 0; o < cfg.offsets_per_site(); ++o) {
        const auto target = cfg.step(site, o);
        if (!target || !cfg.is_open(site, lvl, o)) continue;
        auto [it, fresh] = seen.try_emplace(*target, static_cast<Vertex>(sites.size()));
        if (fresh) {
          sites.push_back(*target);
          levels.push_back(lvl + 1);
          next.push_back(it->second);
        }
        edges.push_back({v, it->second});
        oriented.emplace_back(v, it->second);
      }
    }
    frontier.swap(next);
  }
  const std::size_t n = sites.size();
  std::vector<std::int64_t> labels(n);
  std::vector<std::uint8_t> fr(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    labels[v] = sites[v] * (prm.horizon + 1) + levels[v];
    fr[v] = levels[v] == cutoff ? 1 : 0;
  }
  return {Graph(n, edges, 0, std::move(levels), std::move(labels), std::move(fr)),
          std::move(oriented), cutoff, std::move(sites), {}};
}

std::vector<std::int64_t> slice_sizes(const OrientedConfig& cfg, int max_level) {
  const auto& prm = cfg.params();
  const int cutoff = std::min(max_level, prm.horizon);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(std::max(max_level, 0)) + 1, 0);
  std::vector<std::int64_t> current{cfg.site_index(std::vector<int>(prm.d, 0))}, next;
  sizes[0] = 1;
  for (int lvl = 0; lvl < cutoff && !current.empty(); ++lvl) {
    next.clear();
    for (std::int64_t site : current)
      for (int o = 0; o < cfg.offsets_per_site(); ++o) {
        const auto target = cfg.step(site, o);
        if (target && cfg.is_open(site, lvl, o)) next.push_back(*target);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    current.swap(next);
    sizes[lvl + 1] = static_cast<std::int64_t>(current.size());
  }
  return sizes;
}

bool survives_to(const OrientedConfig& cfg, int level) {
  if (level > cfg.params().horizon) throw InvalidArgument("level beyond the configuration horizon");
  return slice_sizes(cfg, level).back() > 0;
}

namespace {

OrientedConfig trial_config(int d, int L, double p, int n, std::uint64_t seed, std::size_t trial) {
  OrientedParams prm{d, L, p, n, L * n, false};
  return OrientedConfig::sample(prm, derive_seed(seed, trial));
}

}  // namespace

Estimate survival_prob(int d, int L, double p, int n, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (n < 0) throw InvalidArgument("level must be >= 0");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t)
    if (survives_to(trial_config(d, L, p, n, seed, t), n)) ++hits;
  const double m = static_cast<double>(hits) / static_cast<double>(trials);
  return {m, std::sqrt(m * (1.0 - m) / static_cast<double>(trials)), trials};
}

TwoPointEstimate two_point(int d, int L, double p, int n, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (n < 0) throw InvalidArgument("level must be >= 0");
  TwoPointEstimate est;
  est.level = n;
  est.trials = trials;
  std::map<std::int64_t, std::int64_t> occupancy;
  RunningStats sizes;
  std::size_t nonempty = 0;
  std::optional<OrientedConfig> last;
  for (std::size_t t = 0; t < trials; ++t) {
    const OrientedConfig cfg = trial_config(d, L, p, n, seed, t);
    const ClusterGraph c = forward_cluster(cfg, {std::vector<int>(d, 0), 0});
    std::int64_t slice = 0;
    for (std::size_t v = 0; v < c.sites.size(); ++v)
      if (c.graph.level(static_cast<Vertex>(v)) == n) {
        ++slice;
        ++occupancy[c.sites[v]];
      }
    sizes.add(static_cast<double>(slice));
    if (slice > 0) ++nonempty;
    if (!last) last.emplace(cfg);
  }
  est.tau = sizes.mean();
  est.std_error = sizes.std_error();
  est.nonempty_fraction = static_cast<double>(nonempty) / static_cast<double>(trials);
  for (auto [site, count] : occupancy)
    est.histogram.emplace_back(last->site_coordinates(site),
                               static_cast<double>(count) / static_cast<double>(trials));
  std::sort(est.histogram.begin(), est.histogram.end());
  return est;
}

double survival_plateau_slope(int d, int L, double p, int n_max, std::size_t trials,
                              std::uint64_t seed) {
  if (n_max < 8) throw InvalidArgument("n_max must be >= 8");
  const int window[] = {n_max / 4, n_max / 2, n_max};
  std::size_t hits[3] = {0, 0, 0};
  for (std::size_t t = 0; t < trials; ++t) {
    const auto sizes = slice_sizes(trial_config(d, L, p, n_max, seed, t), n_max);
    for (int k = 0; k < 3; ++k)
      if (sizes[window[k]] > 0) ++hits[k];
  }
  std::vector<double> xs, ys;
  for (int k = 0; k < 3; ++k) {
    if (hits[k] == 0) return -std::numeric_limits<double>::infinity();
    const double theta = static_cast<double>(hits[k]) / static_cast<double>(trials);
    xs.push_back(std::log(static_cast<double>(window[k])));
    ys.push_back(std::log(theta * window[k]));
  }
  return least_squares(xs, ys).slope;
}

CriticalPointEstimate estimate_pc(int d, int L, int n_max, std::size_t trials, std::uint64_t seed,
                                  double p_lo, double p_hi, int iterations) {
  if (n_max < 8) throw InvalidArgument("n_max must be >= 8");
  if (p_lo < 0.0) p_lo = 1.0 / std::pow(2.0 * L + 1.0, d);
  if (!(p_lo < p_hi)) throw InvalidArgument("empty initial interval for p_c");
  auto slope = [&](double p) { return survival_plateau_slope(d, L, p, n_max, trials, seed); };
  if (!(slope(p_lo) < 0.0) || !(slope(p_hi) > 0.0))
    throw InvalidArgument("initial interval [" + std::to_string(p_lo) + ", " +
                          std::to_string(p_hi) + "] does not bracket the critical point");
  CriticalPointEstimate est;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (p_lo + p_hi);
    (slope(mid) > 0.0 ? p_hi : p_lo) = mid;
    ++est.iterations;
  }
  est.p_lo = p_lo;
  est.p_hi = p_hi;
  est.p_hat = 0.5 * (p_lo + p_hi);
  est.plateau_slope = slope(est.p_hat);
  est.plateau_flat = std::abs(est.plateau_slope) < 0.1;
  return est;
}

}  // namespace critwalk
