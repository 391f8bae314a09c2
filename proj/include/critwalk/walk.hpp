#pragma once

// Simple random walk: trajectories with range and displacement statistics,
// exit times, exact heat kernels, and Monte Carlo return probabilities.
//
// Every walk checks the graph's truncation margin first: a walk that could
// reach a frontier vertex is rejected rather than silently biased.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "critwalk/graph.hpp"
#include "critwalk/stats.hpp"

namespace critwalk {

struct WalkTrace {
  Vertex start = 0;
  std::uint64_t seed = 0;
  std::vector<Vertex> steps;                // X_0 .. X_n
  std::vector<std::int64_t> range_measure;  // S_k = mu(W_k)
  std::vector<std::int64_t> range_size;     // |W_k|
  std::vector<int> max_displacement;        // Y_k = max_{j<=k} d(root, X_j)
  /// (R, tau_R) for each requested radius; -1 when the walk stayed in B(R).
  std::vector<std::pair<int, std::int64_t>> exit_times;
};

/// n_steps of simple random walk from `start`. Requires n_steps below the
/// truncation margin of `start`.
WalkTrace walk(const Graph& g, Vertex start, std::int64_t n_steps, std::uint64_t seed,
               std::span<const int> radii = {});

/// Raw little-endian uint32 vertex ids of the trajectory.
void write_trace_binary(std::ostream& os, const WalkTrace& trace);

/// Reusable walker for many walks on one graph: caches root distances and
/// uses epoch stamps so range bookkeeping costs nothing per walk.
class WalkEngine {
 public:
  explicit WalkEngine(const Graph& g);

  const Graph& graph() const noexcept { return g_; }
  const std::vector<int>& root_distance() const noexcept { return root_dist_; }

  struct Profile {
    std::vector<std::int64_t> range_measure;  // S_n at each checkpoint
    std::vector<std::int64_t> range_size;     // |W_n|
    std::vector<int> max_displacement;        // Y_n
  };

  /// Range and displacement at increasing checkpoint times (one walk).
  Profile profile(Vertex start, std::span<const std::int64_t> checkpoints, std::uint64_t seed);

  struct ExitTime {
    std::int64_t time = 0;
    bool censored = false;
  };

  /// tau_R = min{n >= 0 : X_n not in B(root, R)}, censored at cap.
  ExitTime exit_time(Vertex start, int radius, std::int64_t cap, std::uint64_t seed) const;

 private:
  const Graph& g_;
  std::vector<int> root_dist_;
  int root_margin_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

struct ExitTimeSamples {
  int radius = 0;
  std::int64_t cap = 0;
  std::vector<std::int64_t> times;  // censored entries hold cap
  std::size_t censored = 0;
  double mean = 0.0;
  double std_error = 0.0;
  Interval mean_ci;    // bootstrap
  double median = 0.0;
  Interval median_ci;  // bootstrap
};

/// Default censoring cap 64 R^3.
std::int64_t default_exit_cap(int radius);

/// i.i.d. exit times from B(root, R). Requires B(root, R) inside the
/// truncation (R <= margin of the root) and cap >= R; cap <= 0 selects the
/// default.
ExitTimeSamples exit_time_samples(const Graph& g, Vertex start, int radius, std::size_t trials,
                                  std::int64_t cap, std::uint64_t seed);

struct HeatKernelTable {
  Vertex source = 0;
  /// density[k][y] = p_k(x, y) = P^x(X_k = y) / mu_y, k = 0..n_max.
  std::vector<std::vector<double>> density;
};

/// Exact heat kernel by repeated application of the transition operator.
/// Rejects tables larger than `budget` vertex-steps and walks that could
/// reach the truncation frontier.
HeatKernelTable heat_kernel_exact(const Graph& g, Vertex x, int n_max,
                                  std::size_t budget = 1'000'000);

/// p_k(x, x) for k = 0..n_max computed on the ball B(x, radius) with the
/// walk killed on reaching distance `radius`. value[k] is the killed
/// return density, which differs from the true p_k(x, x) by at most
/// bound[k] >= 0 (the killed mass by time k - radius, divided by mu_x); the
/// bound is exactly zero whenever 2 * radius > k.
struct ReturnSeries {
  Vertex source = 0;
  int radius = 0;
  std::vector<double> value;
  std::vector<double> bound;
  std::size_t vertex_steps = 0;
};

ReturnSeries return_probability_series(const Graph& g, Vertex x, int n_max, int radius);

struct ReturnEstimate {
  double value = 0.0;  // estimate of p_{2n}(x, x)
  double std_error = 0.0;
  Interval ci;  // Wilson 95% on the return frequency, scaled by 1/mu_x
  std::size_t returns = 0;
  std::size_t trials = 0;
};

/// Monte Carlo p_{2n}(x, x): fraction of 2n-step walks ending at x, over mu_x.
ReturnEstimate return_prob_mc(const Graph& g, Vertex x, int n, std::size_t trials,
                              std::uint64_t seed);

}  // namespace critwalk
