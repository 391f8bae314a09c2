#pragma once

// Level cut-sets of oriented clusters, the cut-set lower bound on the
// resistance to a level, membership of a radius in J(lambda), and Monte Carlo
// checks of the volume and resistance assumptions on sampled environments.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "critwalk/iic.hpp"
#include "critwalk/percolation.hpp"
#include "critwalk/stats.hpp"

namespace critwalk {

using OrientedEdge = std::pair<Vertex, Vertex>;

/// D(n): occupied oriented edges ((w, n-1), (x, n)) whose head x is joined
/// to some vertex of level R by an undirected path staying in levels >= n.
/// Requires 0 < n <= R <= truncation_level. Sorted.
std::vector<OrientedEdge> cut_set(const ClusterGraph& cluster, int n, int R);

struct CutSetReport {
  int R = 0;
  std::vector<std::int64_t> sizes;  // |D(n)| for n = 1..R
  double lower_bound = 0.0;         // sum of 1 / |D(n)|
  bool has_exact = false;
  double exact_resistance = 0.0;    // R_eff(root, level-R vertices)
};

/// Throws InvalidArgument when the cluster does not reach level R. With
/// `with_exact`, also solves for the resistance and throws std::logic_error
/// if the bound exceeds it by more than 1e-9.
CutSetReport cutset_bound(const ClusterGraph& cluster, int R, bool with_exact);

/// Vertices of the cluster at level exactly R.
std::vector<Vertex> level_set(const ClusterGraph& cluster, int R);

/// Cluster built from explicit oriented edges; levels are the oriented
/// distance from `root`. Every vertex must be reachable from the root and
/// each edge must join consecutive levels.
ClusterGraph oriented_cluster(std::size_t num_vertices, std::span<const OrientedEdge> arcs,
                              Vertex root, int truncation_level);

/// Hand fixtures: the oriented path 0 -> 1 -> ... -> length, and the diamond
/// root -> a, root -> b, a -> c, b -> c, optionally with the extra arc a -> d.
ClusterGraph oriented_path_fixture(int length);
ClusterGraph diamond_fixture(bool with_extra_arc);

struct JReport {
  int R = 0;
  double lambda = 0.0;
  std::int64_t volume = 0;   // V(R)
  double resistance = 0.0;   // R_eff(root, B(R)^c)
  bool vol_upper = false;    // V(R) <= lambda R^2
  bool vol_lower = false;    // V(R) >= R^2 / lambda
  bool res_lower = false;    // R_eff >= R / lambda
  bool in_J = false;
};

/// Relative slack granted to the resistance comparisons.
inline constexpr double kResistanceSlack = 1e-9;

/// Volume and resistance of B(root, R), which must lie inside the truncation.
/// Throws std::logic_error if the resistance exceeds R (solver failure).
std::pair<std::int64_t, double> ball_volume_and_resistance(const Graph& g, int R);

JReport check_J(const Graph& g, int R, double lambda);
JReport evaluate_J(int R, double lambda, std::int64_t volume, double resistance);

struct JSample {
  std::int64_t volume = 0;
  double resistance = 0.0;
};

/// One (V(R), R_eff) pair per environment, environment t seeded
/// derive_seed(seed, t).
std::vector<JSample> sample_j_statistics(const IICSampleSpec& spec, int R, std::size_t trials,
                                         std::uint64_t seed);

struct PLambdaEstimate {
  double lambda = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;  // environments with R not in J(lambda)
  double fraction = 0.0;
  Interval ci;               // Wilson 95%
  double vol_upper_fail = 0.0;
  double vol_lower_fail = 0.0;
  double res_lower_fail = 0.0;
};

std::vector<PLambdaEstimate> p_lambda_from_samples(std::span<const JSample> samples, int R,
                                                   std::span<const double> lambdas);

/// Empirical P(R not in J(lambda)) for each lambda, all on the same
/// environments. Requires trials >= 30.
std::vector<PLambdaEstimate> estimate_p_lambda(const IICSampleSpec& spec, int R,
                                               std::span<const double> lambdas,
                                               std::size_t trials, std::uint64_t seed);

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins);

struct VolumeMoments {
  int R = 0;
  std::size_t trials = 0;
  double b0 = 0.5;
  double mean_volume_scaled = 0.0;   // E[V(R)] / R^2
  Interval mean_volume_ci;
  double mean_inverse_scaled = 0.0;  // E[1/V(R)] R^2
  Interval mean_inverse_ci;
  bool jensen_ok = false;            // E[1/V] >= 1/E[V]
  std::vector<std::int64_t> volumes;
  std::vector<double> z;             // Z_R = b0 V(R) / R^2
  Histogram z_histogram;

  /// Fraction of environments with V(R) / R^2 < lambda.
  double lower_tail(double lambda) const;
};

VolumeMoments volume_moments(std::span<const std::int64_t> volumes, int R, double b0,
                             std::uint64_t seed, std::size_t bins = 20);

/// Requires trials >= 30.
VolumeMoments volume_moments(const IICSampleSpec& spec, int R, std::size_t trials,
                             std::uint64_t seed, double b0 = 0.5, std::size_t bins = 20);

}  // namespace critwalk
