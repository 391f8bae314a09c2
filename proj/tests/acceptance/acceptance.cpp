// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--only <name>` runs a subset.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "critwalk/cutsets.hpp"
#include "critwalk/errors.hpp"
#include "critwalk/experiments.hpp"
#include "critwalk/iic.hpp"
#include "critwalk/moments.hpp"
#include "critwalk/percolation.hpp"
#include "critwalk/resistance.hpp"
#include "critwalk/walk.hpp"
#include "oracles.hpp"

using namespace critwalk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::vector<Vertex> random_subset(CounterRng& rng, std::size_t n, Vertex exclude, unsigned keep_one_in) {
  std::vector<Vertex> out;
  for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v)
    if (v != exclude && rng.below(keep_one_in) == 0) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------

void resistance_identities(Outcome& out) {
  CounterRng rng(derive_seed(1, 0xa1));
  double worst = 0.0;
  int graphs = 0;
  while (graphs < 1000) {
    const Graph g = oracle::random_graph(rng, 2, 12);
    const auto n = g.num_vertices();
    std::vector<Vertex> dom;
    for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v)
      if (rng.below(3) != 0) dom.push_back(v);
    if (dom.empty() || dom.size() == n) continue;
    ++graphs;
    const auto mask = to_mask(g, dom);
    oracle::Mask inside(mask.begin(), mask.end()), outside(n, 0);
    for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v) outside[v] = mask[v] ? 0 : 1;
    for (Vertex x : dom) {
      const auto row = green_function(g, dom, x);
      const double reff = oracle::escape_resistance(g, x, outside);
      const double lib_reff = resistance_to_complement(g, x, mask);
      worst = std::max({worst, std::abs(row.values[x] - reff), std::abs(lib_reff - reff)});
      out.require(close(row.values[x], reff, 1e-9), "g_B(x,x) vs first-passage R_eff");
      out.require(close(lib_reff, reff, 1e-9), "library R_eff vs first-passage R_eff");
      double sum = 0.0;
      for (Vertex y : dom) sum += row.values[y] * g.degree(y);
      const double tau = oracle::exit_time(g, inside, x);
      worst = std::max({worst, std::abs(sum - tau) / std::max(1.0, tau)});
      out.require(close(sum, tau, 1e-9), "sum g_B(z,y) mu_y vs first-passage exit time");
      out.require(close(expected_exit_time_exact(g, dom, x), tau, 1e-9), "exit time");
    }
  }
  out.detail << graphs << " graphs, worst deviation " << worst;
}

void resistance_properties(Outcome& out) {
  CounterRng rng(derive_seed(1, 0xa2));
  int graphs = 0;
  std::size_t checks = 0;
  while (graphs < 1000) {
    const Graph g = oracle::random_graph(rng, 3, 12);
    const auto n = g.num_vertices();
    ++graphs;
    std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
    for (Vertex x = 0; static_cast<std::size_t>(x) < n; ++x)
      for (Vertex y = x + 1; static_cast<std::size_t>(y) < n; ++y) {
        r[x][y] = resistance_between(g, x, y);
        r[y][x] = resistance_between(g, y, x);
        out.require(close(r[x][y], oracle::point_resistance(g, x, y), 1e-9), "R_eff vs oracle");
      }
    // (a) metric
    for (Vertex x = 0; static_cast<std::size_t>(x) < n; ++x)
      for (Vertex y = 0; static_cast<std::size_t>(y) < n; ++y) {
        out.require(x == y ? r[x][y] == 0.0 : r[x][y] > 0.0, "positivity");
        out.require(close(r[x][y], r[y][x], 1e-12), "symmetry");
        // (c) R_eff <= d
        out.require(r[x][y] <= distance(g, x, y) + 1e-9, "R_eff <= graph distance");
        for (Vertex z = 0; static_cast<std::size_t>(z) < n; ++z)
          out.require(r[x][z] <= r[x][y] + r[y][z] + 1e-9, "triangle inequality");
        checks += n;
      }
    // (b) set monotonicity, (d) triangle inequality to a set
    for (int t = 0; t < 4; ++t) {
      const Vertex x = static_cast<Vertex>(rng.below(n));
      auto a = random_subset(rng, n, x, 3);
      if (a.empty()) continue;
      const Vertex src[] = {x};
      const double base = effective_resistance(g, src, a).value;
      auto bigger = a;
      for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v)
        if (v != x && rng.below(2) == 0 && !std::count(a.begin(), a.end(), v)) bigger.push_back(v);
      out.require(effective_resistance(g, src, bigger).value <= base + 1e-9, "monotone in the target set");
      for (Vertex y = 0; static_cast<std::size_t>(y) < n; ++y) {
        if (y == x || std::count(a.begin(), a.end(), y)) continue;
        const Vertex ys[] = {y};
        out.require(base <= r[x][y] + effective_resistance(g, ys, a).value + 1e-9,
                    "R(x,A) <= R(x,y) + R(y,A)");
      }
      checks += 2 + n;
    }
    // (e) removing an edge that keeps the graph connected cannot lower R_eff
    auto edges = g.edges();
    if (edges.size() > n - 1) {
      edges.erase(edges.begin() + static_cast<long>(rng.below(edges.size())));
      try {
        const Graph sub(n, edges, g.root());
        for (Vertex x = 0; static_cast<std::size_t>(x) < n; ++x)
          for (Vertex y = x + 1; static_cast<std::size_t>(y) < n; ++y)
            out.require(resistance_between(sub, x, y) >= r[x][y] - 1e-9, "subgraph monotonicity");
        checks += n * (n - 1) / 2;
      } catch (const InvalidArgument&) {
        // a bridge; the subgraph is disconnected
      }
    }
    // (f) |f(x) - f(y)|^2 <= R_eff(x, y) E(f, f)
    for (int t = 0; t < 5; ++t) {
      std::vector<double> f(n);
      for (double& v : f) v = 2.0 * rng.uniform() - 1.0;
      const double e = dirichlet_energy(g, f);
      for (Vertex x = 0; static_cast<std::size_t>(x) < n; ++x)
        for (Vertex y = 0; static_cast<std::size_t>(y) < n; ++y)
          out.require((f[x] - f[y]) * (f[x] - f[y]) <= r[x][y] * e * (1 + 1e-9) + 1e-12, "energy bound");
      checks += n * n;
    }
  }
  out.detail << graphs << " graphs, " << checks << " checks";
}

void cutset_bound_check(Outcome& out) {
  const auto pc = estimate_pc(1, 1, 64, 400, derive_seed(1, 0xa3), -1.0, 1.0, 8);
  const double p = pc.p_hat;
  std::size_t comparisons = 0, tight = 0;
  double min_gap = INFINITY;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto c = sample_iic_lattice({1, 1, p, 12, 24, 10'000'000}, derive_seed(2, s)).cluster;
    for (int R = 1; R <= 12; ++R) {
      const auto rep = cutset_bound(c, R, true);
      out.require(rep.lower_bound <= rep.exact_resistance + 1e-9, "bound exceeds resistance");
      min_gap = std::min(min_gap, rep.exact_resistance - rep.lower_bound);
      if (std::abs(rep.exact_resistance - rep.lower_bound) <= 1e-9) ++tight;
      ++comparisons;
    }
  }
  for (int len = 1; len <= 12; ++len) {
    const auto rep = cutset_bound(oriented_path_fixture(len), len, true);
    out.require(std::abs(rep.lower_bound - rep.exact_resistance) <= 1e-9, "path equality");
  }
  const auto d = cutset_bound(diamond_fixture(false), 2, true);
  out.require(std::abs(d.lower_bound - 1.0) <= 1e-9 && std::abs(d.exact_resistance - 1.0) <= 1e-9,
              "diamond equality");
  const auto e = cutset_bound(diamond_fixture(true), 2, true);
  out.require(std::abs(e.lower_bound - 5.0 / 6.0) <= 1e-9 && std::abs(e.exact_resistance - 6.0 / 7.0) <= 1e-9,
              "augmented diamond 5/6 vs 6/7");
  out.detail << "p=" << p << " (estimated p_c), 200 clusters, " << comparisons
             << " comparisons, " << tight << " tight, smallest gap " << min_gap
             << "; fixtures: path = length, diamond 1 = 1, augmented " << e.lower_bound << " < "
             << e.exact_resistance;
}

void qn_sampler(Outcome& out) {
  const int n = 2, keep = 1;
  const double p = 0.5;
  const auto q = brute_force_qn(1, 1, p, n, keep);
  const auto probe = OrientedConfig::sample({1, 1, p, n, n, false}, 0);
  const int zero[] = {0};
  const std::int64_t origin = probe.site_index(zero);
  auto bond = [&](int e) {
    const int off[] = {e};
    return Bond{origin, 0, probe.offset_index(off)};
  };
  auto has = [](const std::vector<Bond>& bs, const Bond& b) {
    return std::binary_search(bs.begin(), bs.end(), b);
  };
  const Bond left = bond(-1), mid = bond(0), right = bond(1);
  struct Event {
    const char* name;
    std::function<bool(const std::vector<Bond>&)> f;
  };
  const std::vector<Event> events = {
      {"straight bond open", [&](const auto& b) { return has(b, mid); }},
      {"all three open", [&](const auto& b) { return b.size() == 3; }},
      {"exactly one open", [&](const auto& b) { return b.size() == 1; }},
      {"left open, right closed", [&](const auto& b) { return has(b, left) && !has(b, right); }},
      {"left and straight open", [&](const auto& b) { return has(b, left) && has(b, mid); }},
  };
  const std::size_t samples = 100000;
  std::vector<std::size_t> hits(events.size(), 0);
  for (std::size_t t = 0; t < samples; ++t) {
    const auto c = sample_iic_lattice({1, 1, p, keep, n, 1'000'000}, derive_seed(3, t)).cluster;
    std::vector<Bond> bs;
    for (const auto& [u, v] : c.oriented_edges) {
      if (c.graph.level(u) >= keep) continue;
      const int off[] = {static_cast<int>(probe.site_coordinates(c.sites[v])[0] -
                                          probe.site_coordinates(c.sites[u])[0])};
      bs.push_back({c.sites[u], c.graph.level(u), probe.offset_index(off)});
    }
    std::sort(bs.begin(), bs.end());
    for (std::size_t e = 0; e < events.size(); ++e) hits[e] += events[e].f(bs);
  }
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double exact = q.probability(events[e].f);
    const double freq = static_cast<double>(hits[e]) / samples;
    const double sigma = std::sqrt(exact * (1 - exact) / samples);
    out.require(std::abs(freq - exact) <= 3 * sigma, events[e].name);
    out.detail << events[e].name << ": " << freq << " vs " << exact << " ("
               << (sigma > 0 ? (freq - exact) / sigma : 0.0) << " sigma); ";
  }
}

void moments_check(Outcome& out) {
  double worst = 0.0;
  for (int r = 1; r <= 5; ++r)
    for (double t : {0.5, 1.0, 2.0}) {
      const double v = m_hat({r, std::vector<double>(static_cast<std::size_t>(r), t)});
      const double c = m_hat_closed_equal(r, t);
      worst = std::max(worst, std::abs(v - c) / c);
      out.require(std::abs(v - c) <= 1e-5 * c, "closed form at equal times");
    }
  const auto z1 = z_moment(1);
  out.require(std::abs(z1.value - 0.5) <= 1e-5, "E Z = 1/2");
  out.detail << "closed-form worst rel. error " << worst << "; E Z^l =";
  for (int l = 1; l <= 5; ++l) {
    const auto z = z_moment(l);
    out.require(z.value <= z.bound, "moment bound");
    out.detail << " " << z.value << " (<= " << z.bound << ")";
  }
  CounterRng rng(derive_seed(1, 0xa5));
  for (int pair = 0; pair < 500; ++pair) {
    const int r = 1 + static_cast<int>(rng.below(4));
    std::vector<double> s(static_cast<std::size_t>(r));
    for (double& x : s) x = 0.25 + 1.75 * rng.uniform();
    auto bigger = s;
    bigger[rng.below(static_cast<std::uint64_t>(r))] *= 1.1;
    out.require(m_hat({r, s}) <= m_hat({r, bigger}) + 1e-6, "monotone in each time");
  }
  out.detail << "; 500 monotonicity pairs (r <= 4, one time +10%)";
}

Row synthetic_row(const std::string& obs, std::int64_t scale, std::uint64_t trial, double value) {
  Row r;
  r.experiment_id = "acceptance";
  r.environment = "tree-m2";
  r.scale = scale;
  r.trial = trial;
  r.observable = obs;
  r.value = value;
  return r;
}

void report_fit(Outcome& out, const char* label, const ExponentFit& fit, double target, double tol) {
  const bool ok = std::abs(fit.slope - target) <= tol;
  out.require(ok, std::string(label) + " slope");
  out.detail << label << " slope " << fit.slope << " ci95 [" << fit.ci95.lo << ", " << fit.ci95.hi
             << "] target " << target << " +- " << tol << (ok ? "" : " MISS") << "; ";
}

void tree_exponents(Outcome& out, std::size_t envs, std::size_t walks, const fs::path& scratch) {
  // Mean exit times through the campaign runner.
  ExperimentConfig c;
  c.experiment_id = "accept_tree_exit";
  c.environment = TreeIICSpec{2, 1, 60'000'000};
  c.observable = Observable::exit_time;
  c.scales = {16, 32, 64, 128};
  c.trials = envs;
  c.walks = walks;
  c.seed = 20240601;
  c.output_dir = scratch.string();
  c.fit_window = std::pair<std::int64_t, std::int64_t>{16, 128};
  const auto res = run(c);
  const auto rows = read_csv(res.csv);
  std::int64_t censored = 0;
  for (const auto& r : rows) censored += r.censored;
  out.require(censored == 0, "censored exit times");
  report_fit(out, "tau_R", fit_exponent(rows, "exit_time", c.fit_window, 1), 3.0, 0.3);

  // Return probabilities, range and displacement on one deep tree per
  // environment: all five time scales are read off the same environment.
  const std::vector<std::int64_t> ns{256, 512, 1024, 2048, 4096};
  const std::vector<std::int64_t> checkpoints(ns.begin(), ns.end());
  const int n_max = static_cast<int>(ns.back());
  const std::pair<std::int64_t, std::int64_t> window{ns.front(), ns.back()};
  std::vector<Row> p_rows, s_rows, y_rows;
  int max_radius = 0;
  for (std::size_t t = 0; t < envs; ++t) {
    const std::uint64_t seed = derive_seed(20240602, t);
    const auto env = sample_iic_tree({2, n_max + 1, 60'000'000}, derive_seed(seed, 0));
    const Graph& g = env.graph;
    int radius = 128;
    ReturnSeries series;
    for (;;) {
      series = return_probability_series(g, g.root(), 2 * n_max, radius);
      bool certified = true;
      for (auto n : ns) certified = certified && series.bound[2 * n] <= 1e-9 * series.value[2 * n];
      if (certified) break;
      if (2 * radius > n_max + 1) throw BudgetExceeded("return series could not be certified");
      radius *= 2;
    }
    max_radius = std::max(max_radius, radius);
    WalkEngine engine(g);
    std::vector<double> s_sum(ns.size(), 0.0), y_sum(ns.size(), 0.0);
    for (std::size_t w = 0; w < walks; ++w) {
      const auto prof = engine.profile(g.root(), checkpoints, derive_seed(seed, 1, w));
      for (std::size_t i = 0; i < ns.size(); ++i) {
        s_sum[i] += static_cast<double>(prof.range_measure[i]);
        y_sum[i] += static_cast<double>(prof.max_displacement[i]);
      }
    }
    for (std::size_t i = 0; i < ns.size(); ++i) {
      p_rows.push_back(synthetic_row("return_prob", ns[i], t, series.value[2 * ns[i]]));
      s_rows.push_back(synthetic_row("range", ns[i], t, s_sum[i] / static_cast<double>(walks)));
      y_rows.push_back(synthetic_row("displacement", ns[i], t, y_sum[i] / static_cast<double>(walks)));
    }
  }
  report_fit(out, "p_2n", fit_exponent(p_rows, "return_prob", window, 2), -2.0 / 3.0, 0.1);
  report_fit(out, "S_n", fit_exponent(s_rows, "range", window, 3), 2.0 / 3.0, 0.1);
  report_fit(out, "Y_n", fit_exponent(y_rows, "displacement", window, 4), 1.0 / 3.0, 0.1);
  out.detail << envs << " environments x " << walks << " walks, kernel radius up to " << max_radius;
}

void assumption_suite(Outcome& out, std::size_t envs) {
  ExperimentConfig c;
  c.experiment_id = "accept_suite";
  c.environment = TreeIICSpec{2, 1, 60'000'000};
  c.observable = Observable::j_check;
  c.scales = {16, 32, 64};
  c.trials = envs;
  c.seed = 20240603;
  const auto j = verify_assumption_suite(c);
  out.require(j["all_monotone"].get<bool>(), "J failure fraction monotone in lambda");
  out.require(j["all_stable"].get<bool>(), "volume moments stable across R");
  for (const auto& row : j["rows"]) {
    out.require(row["volume"]["jensen_ok"].get<bool>(), "Jensen");
    out.detail << "R=" << row["R"] << ": E[V]/R^2=" << row["volume"]["mean_scaled"].get<double>()
               << " R^2 E[1/V]=" << row["volume"]["mean_inverse_scaled"].get<double>() << " p(lambda)=";
    for (const auto& cell : row["cells"]) out.detail << cell["fraction"].get<double>() << " ";
    out.detail << "; ";
  }
  for (const auto& s : j["stability"])
    out.detail << s["from"] << "->" << s["to"] << " ratios " << s["volume_ratio"].get<double>() << ", "
               << s["inverse_ratio"].get<double>() << "; ";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void determinism(Outcome& out, const fs::path& scratch) {
  std::vector<ExperimentConfig> configs;
  auto base = [&](const std::string& id, EnvironmentSpec env, Observable o, std::vector<std::int64_t> scales) {
    ExperimentConfig c;
    c.experiment_id = id;
    c.environment = std::move(env);
    c.observable = o;
    c.scales = std::move(scales);
    c.trials = 12;
    c.walks = 5;
    c.seed = 77;
    c.checkpoint_interval = 5;
    return c;
  };
  configs.push_back(base("det_exit", TreeIICSpec{2, 1, 60'000'000}, Observable::exit_time, {4, 8, 16}));
  configs.push_back(base("det_return", TreeIICSpec{2, 1, 60'000'000}, Observable::return_prob, {8, 16, 32}));
  configs.push_back(base("det_range", TreeIICSpec{2, 1, 60'000'000}, Observable::range, {16, 32, 64}));
  configs.push_back(base("det_cutset", LatticeIICSpec{1, 1, 0.5, 1, 2, 1'000'000}, Observable::cutset, {2, 4, 6}));
  configs.push_back(base("det_line", FixtureSpec{"line", 0}, Observable::j_check, {4, 8, 16}));
  std::size_t files = 0, lines = 0;
  for (auto c : configs) {
    std::vector<std::string> csv, summary;
    for (const char* variant : {"first", "second", "resumed"}) {
      c.output_dir = (scratch / variant).string();
      c.threads = std::string(variant) == "second" ? 1 : 0;
      if (std::string(variant) == "resumed") {
        run(c, {false, 17});
        run(c, {true, 0});
      } else {
        run(c);
      }
      csv.push_back(slurp(fs::path(c.output_dir) / (c.experiment_id + ".csv")));
      summary.push_back(slurp(fs::path(c.output_dir) / (c.experiment_id + ".summary.json")));
    }
    const auto rows = static_cast<std::size_t>(std::count(csv[0].begin(), csv[0].end(), '\n'));
    out.require(rows == c.scales.size() * c.trials + 1, c.experiment_id + " row count");
    lines += rows - 1;
    out.require(csv[0] == csv[1] && csv[0] == csv[2], c.experiment_id + " CSV bytes");
    out.require(summary[0] == summary[1] && summary[0] == summary[2], c.experiment_id + " summary bytes");
    files += 2;
  }
  out.detail << configs.size() << " campaigns x 3 runs (parallel, serial, killed+resumed), " << files
             << " file pairs compared, " << lines << " rows per run";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critwalk acceptance suite"};
  std::vector<std::string> only;
  std::size_t envs = 200, walks = 50;
  std::string scratch = (fs::temp_directory_path() / "critwalk-acceptance").string();
  app.add_option("--only", only, "Run only the named criteria");
  app.add_option("--environments", envs, "Environments for the statistical criteria")->check(CLI::Range(30, 100000));
  app.add_option("--walks", walks, "Walks per environment")->check(CLI::Range(1, 100000));
  app.add_option("--scratch", scratch, "Directory for campaign output");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir(scratch);
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"resistance-identities", resistance_identities},
      {"resistance-properties", resistance_properties},
      {"cutset-bound", cutset_bound_check},
      {"qn-sampler", qn_sampler},
      {"moments", moments_check},
      {"tree-exponents", [&](Outcome& o) { tree_exponents(o, envs, walks, dir / "exponents"); }},
      {"assumption-suite", [&](Outcome& o) { assumption_suite(o, envs); }},
      {"determinism", [&](Outcome& o) { determinism(o, dir / "determinism"); }},
  };
  const std::set<std::string> wanted(only.begin(), only.end());
  for (const auto& name : wanted)
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; })) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %-22s %8.1fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
