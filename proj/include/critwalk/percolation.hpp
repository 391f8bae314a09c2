#pragma once

// Spread-out oriented bond percolation on Z^d x Z_+.
//
// A bond joins (x, n) to (y, n+1) whenever ||x - y||_inf <= L (y = x included).
// Bond variables are never stored: bond ((x,n),(x+e,n+1)) is open iff its
// uniform hash(seed, x, n, e) is below p. This gives reproducible configs of
// any size, lazy evaluation, and the monotone coupling in p for free.

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "critwalk/graph.hpp"

namespace critwalk {

struct OrientedParams {
  int d = 1;
  int L = 1;
  double p = 0.5;
  int horizon = 1;  // last level of the space-time box
  int box = 1;      // spatial truncation radius, |x_i| <= box
  /// Permit box < L * horizon; bonds leaving the box are then closed.
  bool allow_boundary_risk = false;
};

struct SpaceTimePoint {
  std::vector<int> x;
  int level = 0;
  friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

/// Directed bond from site index `site` at `level` along offset index `offset`.
struct Bond {
  std::int64_t site;
  int level;
  int offset;
  friend auto operator<=>(const Bond&, const Bond&) = default;
};

class OrientedConfig {
 public:
  /// Random configuration. Throws InvalidArgument on out-of-range parameters
  /// or box < L * horizon without the boundary-risk opt-in.
  static OrientedConfig sample(const OrientedParams& params, std::uint64_t seed);

  /// Deterministic configuration in which exactly the listed bonds are open.
  static OrientedConfig from_bonds(const OrientedParams& params, std::span<const Bond> open);

  const OrientedParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// (2L+1)^d candidate bonds out of every vertex.
  int offsets_per_site() const noexcept { return offsets_per_site_; }
  const std::vector<int>& offset_vector(int offset) const { return offsets_[offset]; }
  int offset_index(std::span<const int> e) const;

  std::int64_t site_index(std::span<const int> x) const;
  std::vector<int> site_coordinates(std::int64_t site) const;
  bool in_box(std::span<const int> x) const;

  /// Site reached from `site` along `offset`, or nullopt when it leaves the box.
  std::optional<std::int64_t> step(std::int64_t site, int offset) const;

  /// Uniform attached to a bond; the bond is open iff uniform < p.
  double bond_uniform(std::int64_t site, int level, int offset) const noexcept;
  bool is_open(std::int64_t site, int level, int offset) const;

  /// Same bond field thresholded at another p (monotone coupling).
  OrientedConfig with_p(double p) const;

 private:
  OrientedConfig(const OrientedParams& params, std::uint64_t seed);

  OrientedParams params_;
  std::uint64_t seed_ = 0;
  int offsets_per_site_ = 1;
  std::int64_t side_ = 1;  // 2 * box + 1
  std::vector<std::vector<int>> offsets_;
  std::vector<std::int64_t> offset_shift_;  // site-index delta of each offset
  std::optional<std::unordered_set<std::uint64_t>> explicit_open_;
};

/// An oriented cluster as a rooted graph with level labels.
struct ClusterGraph {
  Graph graph;
  /// (parent, child) vertex pairs, level(child) = level(parent) + 1.
  std::vector<std::pair<Vertex, Vertex>> oriented_edges;
  int truncation_level = 0;
  /// Lattice clusters: site index of each vertex. Empty for trees.
  std::vector<std::int64_t> sites;
  /// Tree clusters: spine membership of each vertex. Empty for lattice.
  std::vector<std::uint8_t> spine;
};

/// C(source) = {(y, m) : source -> (y, m)}, grown level by level up to
/// cutoff = min(max_level, horizon). Vertices at the cutoff level are marked
/// frontier: their outgoing bonds were not explored.
ClusterGraph forward_cluster(const OrientedConfig& cfg, const SpaceTimePoint& source,
                             std::optional<int> max_level = std::nullopt);

/// Sizes of the level slices of the forward cluster of the origin, levels
/// 0..max_level (trailing zeros once the cluster dies).
std::vector<std::int64_t> slice_sizes(const OrientedConfig& cfg, int max_level);

/// Whether (0,0) -> level n.
bool survives_to(const OrientedConfig& cfg, int level);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// theta_N = P((0,0) -> N) by Monte Carlo over independent configurations
/// seeded derive_seed(seed, trial).
Estimate survival_prob(int d, int L, double p, int n, std::size_t trials, std::uint64_t seed);

struct TwoPointEstimate {
  int level = 0;
  double tau = 0.0;                // mean slice size at level n
  double std_error = 0.0;
  double nonempty_fraction = 0.0;  // P(slice n nonempty)
  std::size_t trials = 0;
  /// (site offset x, mean occupation of (x, n)) sorted by x.
  std::vector<std::pair<std::vector<int>, double>> histogram;
};

TwoPointEstimate two_point(int d, int L, double p, int n, std::size_t trials, std::uint64_t seed);

struct CriticalPointEstimate {
  double p_lo = 0.0;
  double p_hi = 1.0;
  double p_hat = 0.5;
  /// log-log slope of theta_N * N over the plateau window at p_hat.
  double plateau_slope = 0.0;
  bool plateau_flat = false;  // |plateau_slope| < 0.1
  int iterations = 0;
};

/// log-log slope of N * theta_N over N in {n_max/4, n_max/2, n_max} at p,
/// on the common seeds derive_seed(seed, trial).
double survival_plateau_slope(int d, int L, double p, int n_max, std::size_t trials,
                              std::uint64_t seed);

/// Bisection on p for the point where N * theta_N is flat in N. The same
/// trial seeds are used at every p, so the estimated survival is monotone in
/// p. Throws InvalidArgument if [p_lo, p_hi] does not bracket a sign change.
CriticalPointEstimate estimate_pc(int d, int L, int n_max, std::size_t trials, std::uint64_t seed,
                                  double p_lo = -1.0, double p_hi = 1.0, int iterations = 12);

}  // namespace critwalk
