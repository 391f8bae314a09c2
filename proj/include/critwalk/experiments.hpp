#pragma once

// Campaign orchestration: configuration, per-task seeding, checkpointed CSV
// output, per-scale aggregation and exponent fits, and the assumption suite.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "critwalk/iic.hpp"
#include "critwalk/stats.hpp"

namespace critwalk {

/// Deterministic graphs: "line" (integer segment) or "comb". `size` is the
/// half width / r_max; 0 sizes the fixture to what each scale needs.
struct FixtureSpec {
  std::string name = "line";
  int size = 0;
};

using EnvironmentSpec = std::variant<LatticeIICSpec, TreeIICSpec, FixtureSpec>;

enum class Observable {
  exit_time,
  return_prob,
  volume,
  resistance,
  cutset,
  range,
  displacement,
  j_check,
  moments,
};

std::string to_string(Observable o);
Observable parse_observable(const std::string& name);

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  EnvironmentSpec environment = TreeIICSpec{};
  Observable observable = Observable::exit_time;
  std::vector<std::int64_t> scales;
  std::size_t trials = 1;       // environments per scale
  std::size_t walks = 1;        // walks per environment, walk observables only
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::size_t checkpoint_interval = 64;
  /// Inclusive scale range used by the fit; empty drops the smallest scale.
  std::optional<std::pair<std::int64_t, std::int64_t>> fit_window;
  double lambda = 4.0;                        // j_check
  std::vector<double> lambdas{2, 4, 8, 16};   // assumption suite
  double b0 = 0.5;
  std::int64_t exit_cap = 0;                  // 0 selects 64 R^3
  unsigned threads = 0;                       // 0 = hardware concurrency

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a of the canonical JSON of everything that affects output bytes
/// (output_dir and threads excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

std::string environment_name(const EnvironmentSpec& env);

/// Environment for one task, large enough that a computation at depth
/// `margin` around the root cannot see the truncation.
ClusterGraph make_environment(const EnvironmentSpec& env, std::uint64_t seed, int margin);

/// Root margin an observable needs at a scale (0 when no environment).
int required_margin(Observable o, std::int64_t scale);

inline constexpr const char* kCsvHeader =
    "experiment_id,environment,scale,trial,seed,observable,value,censored,extra_json";

struct Row {
  std::string experiment_id;
  std::string environment;
  std::int64_t scale = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::string observable;
  double value = 0.0;
  std::int64_t censored = 0;
  std::string extra_json = "{}";
};

std::string format_double(double v);
std::string csv_line(const Row& r);
std::vector<Row> read_csv(std::istream& is);
std::vector<Row> read_csv(const std::filesystem::path& path);

std::uint64_t task_seed(std::uint64_t master, std::int64_t scale, std::uint64_t trial);

/// Measure one (scale, trial) task.
Row measure(const ExperimentConfig& c, std::int64_t scale, std::uint64_t trial);

struct ExponentFit {
  std::vector<std::pair<double, double>> pairs;  // (scale, mean statistic)
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  Interval ci95;
  std::pair<std::int64_t, std::int64_t> fit_window{0, 0};
};

/// Log-log least squares of per-scale means over the window, with a
/// bootstrap CI resampling environments within each scale. Needs >= 3
/// scales in the window and positive values.
ExponentFit fit_exponent(std::span<const Row> rows, const std::string& observable,
                         std::optional<std::pair<std::int64_t, std::int64_t>> window,
                         std::uint64_t seed = 0, std::size_t resamples = 1000);

struct ScaleAggregate {
  std::int64_t scale = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;
  Interval ci95;
  std::int64_t censored = 0;
};

std::vector<ScaleAggregate> aggregate(std::span<const Row> rows, const std::string& observable,
                                      std::uint64_t seed = 0);

struct RunOptions {
  bool resume = false;
  /// Stop (as if killed) once this many tasks have been written; 0 = never.
  std::size_t stop_after = 0;
};

struct RunResult {
  std::filesystem::path csv;
  std::filesystem::path summary;  // empty if stopped early
  std::size_t tasks_total = 0;
  std::size_t tasks_run = 0;
  bool complete = false;
};

/// Run the campaign into <output_dir>/<experiment_id>.csv with checkpoint
/// <experiment_id>.checkpoint.json and, on completion, summary
/// <experiment_id>.summary.json. Resuming with a different config throws.
RunResult run(const ExperimentConfig& c, const RunOptions& opts = {});

nlohmann::json summary_json(const ExperimentConfig& c, std::span<const Row> rows);

/// p(lambda) and volume-moment grid over lambdas x scales on common samples.
nlohmann::json verify_assumption_suite(const ExperimentConfig& c);

/// Apply f to 0..n-1 on up to `threads` workers; results come back in index
/// order regardless of scheduling.
template <class T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& f);

std::string tool_version();

}  // namespace critwalk

#include "critwalk/parallel_impl.hpp"
