// critwalk: command-line front end for campaigns over IIC environments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "critwalk/errors.hpp"
#include "critwalk/experiments.hpp"
#include "critwalk/walk.hpp"

using namespace critwalk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool resume = false;
  std::optional<unsigned> threads;
  std::size_t stop_after = 0;
};

void add_common(CLI::App* sub, Common& o, bool config_required = true) {
  auto* cfg = sub->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) cfg->required();
  sub->add_option("--seed", o.seed, "Override the master seed");
  sub->add_option("--out", o.out, "Override the output directory");
  sub->add_flag("--resume", o.resume, "Continue from the checkpoint in the output directory");
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  sub->add_option("--stop-after", o.stop_after)->group("");  // simulate a kill after N tasks
}

ExperimentConfig load(const Common& o) {
  auto c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

void require_observable(const ExperimentConfig& c, std::initializer_list<Observable> allowed,
                        const std::string& command) {
  for (auto o : allowed)
    if (c.observable == o) return;
  std::string names;
  for (auto o : allowed) names += (names.empty() ? "" : ", ") + to_string(o);
  throw InvalidArgument("'" + command + "' runs observables {" + names + "}, config has '" +
                        to_string(c.observable) + "'");
}

int report(const ExperimentConfig& c, const RunResult& r) {
  std::cout << c.experiment_id << ": " << r.tasks_run << " of " << r.tasks_total << " tasks run, csv "
            << r.csv.string() << '\n';
  if (!r.complete) {
    std::cout << "stopped before completion; rerun with --resume\n";
    return 3;
  }
  std::ifstream is(r.summary);
  const json s = json::parse(is);
  for (const auto& a : s["scales"])
    std::cout << "  scale " << a["scale"] << "  n=" << a["count"] << "  mean " << a["mean"].get<double>()
              << " +- " << a["std_error"].get<double>()
              << (a["censored"].get<std::int64_t>() ? "  censored " + a["censored"].dump() : "") << '\n';
  if (s["fit"].is_null())
    std::cout << "  no fit: " << s["fit_error"].get<std::string>() << '\n';
  else
    std::cout << "  slope " << s["fit"]["slope"].get<double>() << "  ci95 ["
              << s["fit"]["ci95"][0].get<double>() << ", " << s["fit"]["ci95"][1].get<double>() << "]\n";
  std::cout << "summary " << r.summary.string() << '\n';
  return 0;
}

int campaign(const Common& o, std::initializer_list<Observable> allowed, const std::string& command) {
  const auto c = load(o);
  if (allowed.size()) require_observable(c, allowed, command);
  return report(c, run(c, {o.resume, o.stop_after}));
}

// One environment per (scale, trial) as an edge list, plus a JSON sidecar.
int sample_cmd(const Common& o) {
  const auto c = load(o);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  json sidecar = json::array();
  std::size_t written = 0, skipped = 0;
  for (auto scale : c.scales)
    for (std::uint64_t t = 0; t < c.trials; ++t) {
      const auto seed = task_seed(c.seed, scale, t);
      const fs::path file = dir / (c.experiment_id + "_s" + std::to_string(scale) + "_t" + std::to_string(t) + ".edges");
      const auto env = make_environment(c.environment, derive_seed(seed, 0), static_cast<int>(scale));
      if (o.resume && fs::exists(file)) {
        ++skipped;
      } else {
        std::ofstream os(file);
        write_edge_list(os, env.graph);
        if (!os) throw std::runtime_error("write failed for " + file.string());
        ++written;
      }
      sidecar.push_back({{"scale", scale},
                         {"trial", t},
                         {"seed", seed},
                         {"file", file.filename().string()},
                         {"vertices", env.graph.num_vertices()},
                         {"edges", env.graph.num_edges()},
                         {"truncation_level", env.truncation_level},
                         {"root_margin", env.graph.truncation_margin(env.graph.root())}});
    }
  const json out = {{"tool", "critwalk"},
                    {"version", tool_version()},
                    {"config_hash", config_hash(c)},
                    {"environment", environment_name(c.environment)},
                    {"samples", sidecar}};
  std::ofstream(dir / (c.experiment_id + ".samples.json")) << out.dump(2) << '\n';
  std::cout << written << " environments written, " << skipped << " kept, index "
            << (dir / (c.experiment_id + ".samples.json")).string() << '\n';
  return 0;
}

int walk_cmd(const Common& o, const std::string& trace) {
  const auto c = load(o);
  require_observable(c, {Observable::exit_time, Observable::return_prob, Observable::range, Observable::displacement},
                     "walk");
  if (!trace.empty()) {
    // a single trajectory on the first environment of the largest scale
    const auto scale = c.scales.back();
    const auto seed = task_seed(c.seed, scale, 0);
    const auto env = make_environment(c.environment, derive_seed(seed, 0), static_cast<int>(scale) + 1);
    const auto tr = walk(env.graph, env.graph.root(), scale, derive_seed(seed, 1, 0));
    if (fs::path(trace).has_parent_path()) fs::create_directories(fs::path(trace).parent_path());
    std::ofstream os(trace, std::ios::binary);
    write_trace_binary(os, tr);
    if (!os) throw std::runtime_error("write failed for " + trace);
    std::cout << "trace of " << tr.steps.size() << " positions written to " << trace << '\n';
  }
  return report(c, run(c, {o.resume, o.stop_after}));
}

int moments_cmd(const Common& o) {
  const auto c = load(o);
  require_observable(c, {Observable::moments}, "moments");
  const auto res = run(c, {o.resume, o.stop_after});
  if (!res.complete) return report(c, res);
  const fs::path table = fs::path(c.output_dir) / (c.experiment_id + ".table.csv");
  std::ofstream os(table);
  os << "r,s,value,closed_form,abs_err\n";
  std::set<std::int64_t> seen;
  for (const auto& row : read_csv(res.csv)) {
    if (!seen.insert(row.scale).second) continue;
    const auto extra = json::parse(row.extra_json);
    os << row.scale << ',' << format_double(1.0) << ',' << format_double(row.value) << ','
       << format_double(extra["closed_form"].get<double>()) << ',' << format_double(extra["abs_err"].get<double>())
       << '\n';
  }
  std::cout << "table " << table.string() << '\n';
  return report(c, res);
}

int exponents_cmd(const Common& o, const std::vector<std::string>& csvs, const std::string& observable,
                  std::vector<std::int64_t> window) {
  if (csvs.empty()) return campaign(o, {}, "exponents");
  std::vector<Row> rows;
  for (const auto& p : csvs) {
    auto part = read_csv(fs::path(p));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw InvalidArgument("no rows in the given CSV files");
  const std::string obs = observable.empty() ? rows.front().observable : observable;
  std::optional<std::pair<std::int64_t, std::int64_t>> w;
  if (window.size() == 2) w = std::pair{window[0], window[1]};
  const auto fit = fit_exponent(rows, obs, w, o.seed.value_or(0));
  json pairs = json::array();
  for (const auto& [x, y] : fit.pairs) pairs.push_back({x, y});
  const json j = {{"observable", obs},
                  {"rows", rows.size()},
                  {"pairs", pairs},
                  {"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"stderr", fit.stderr_slope},
                  {"ci95", {fit.ci95.lo, fit.ci95.hi}},
                  {"fit_window", {fit.fit_window.first, fit.fit_window.second}}};
  if (o.out) {
    fs::create_directories(*o.out);
    std::ofstream(fs::path(*o.out) / ("fit_" + obs + ".json")) << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int verify_cmd(const Common& o) {
  const auto c = load(o);
  const auto j = verify_assumption_suite(c);
  fs::create_directories(c.output_dir);
  const fs::path path = fs::path(c.output_dir) / (c.experiment_id + ".assumptions.json");
  std::ofstream(path) << j.dump(2) << '\n';
  for (const auto& row : j["rows"]) {
    std::cout << "R=" << row["R"] << "  E[V]/R^2=" << row["volume"]["mean_scaled"].get<double>()
              << "  R^2 E[1/V]=" << row["volume"]["mean_inverse_scaled"].get<double>() << "  p(lambda):";
    for (const auto& cell : row["cells"])
      std::cout << ' ' << cell["lambda"].get<double>() << ':' << cell["fraction"].get<double>();
    std::cout << '\n';
  }
  std::cout << "monotone in lambda: " << j["all_monotone"] << ", stable across R: " << j["all_stable"]
            << "\nreport " << path.string() << '\n';
  return j["all_monotone"].get<bool>() && j["all_stable"].get<bool>() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critwalk: random walk on critical oriented percolation clusters"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  Common sample_o, walk_o, resist_o, cutset_o, jcheck_o, moments_o, exp_o, verify_o;
  std::string trace;
  std::vector<std::string> csvs;
  std::string fit_observable;
  std::vector<std::int64_t> fit_window;

  auto* sample = app.add_subcommand("sample", "Sample environments to edge-list files");
  add_common(sample, sample_o);
  auto* walk_sc = app.add_subcommand("walk", "Exit times, return probabilities, range and displacement");
  add_common(walk_sc, walk_o);
  walk_sc->add_option("--trace", trace, "Also dump one raw uint32 trajectory to this file");
  auto* resist = app.add_subcommand("resist", "Ball volumes and resistances to the ball complement");
  add_common(resist, resist_o);
  auto* cutset = app.add_subcommand("cutset", "Cut-set lower bound against the exact resistance");
  add_common(cutset, cutset_o);
  auto* jcheck = app.add_subcommand("jcheck", "Membership of R in J(lambda)");
  add_common(jcheck, jcheck_o);
  auto* moments = app.add_subcommand("moments", "Equal-time moment table");
  add_common(moments, moments_o);
  auto* exps = app.add_subcommand("exponents", "Run a campaign and fit its exponent, or fit existing CSVs");
  add_common(exps, exp_o, false);
  exps->add_option("--csv", csvs, "Fit these CSV files instead of running")->check(CLI::ExistingFile);
  exps->add_option("--observable", fit_observable, "Observable to fit (default: first row's)");
  exps->add_option("--window", fit_window, "Inclusive scale window lo hi")->expected(2);
  auto* verify = app.add_subcommand("verify-assumption", "Volume and resistance assumption grid");
  add_common(verify, verify_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) return sample_cmd(sample_o);
    if (*walk_sc) return walk_cmd(walk_o, trace);
    if (*resist) return campaign(resist_o, {Observable::resistance, Observable::volume}, "resist");
    if (*cutset) return campaign(cutset_o, {Observable::cutset}, "cutset");
    if (*jcheck) return campaign(jcheck_o, {Observable::j_check}, "jcheck");
    if (*moments) return moments_cmd(moments_o);
    if (*exps) {
      if (csvs.empty() && exp_o.config.empty()) throw InvalidArgument("exponents needs --config or --csv");
      return exponents_cmd(exp_o, csvs, fit_observable, fit_window);
    }
    if (*verify) return verify_cmd(verify_o);
  } catch (const InvalidArgument& e) {
    std::cerr << "critwalk: invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "critwalk: budget exceeded: " << e.what() << '\n';
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "critwalk: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
