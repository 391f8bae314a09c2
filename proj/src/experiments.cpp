#include "critwalk/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "critwalk/cutsets.hpp"
#include "critwalk/errors.hpp"
#include "critwalk/graph.hpp"
#include "critwalk/moments.hpp"
#include "critwalk/rng.hpp"
#include "critwalk/walk.hpp"

namespace critwalk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Observable, const char*> kObservableNames[] = {
    {Observable::exit_time, "exit_time"},   {Observable::return_prob, "return_prob"},
    {Observable::volume, "volume"},         {Observable::resistance, "resistance"},
    {Observable::cutset, "cutset"},         {Observable::range, "range"},
    {Observable::displacement, "displacement"}, {Observable::j_check, "j_check"},
    {Observable::moments, "moments"},
};

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw InvalidArgument(std::string("unknown key '") + key + "' in " + where);
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

EnvironmentSpec environment_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "tree") {
    reject_unknown_keys(j, {"kind", "m", "depth", "max_vertices"}, "tree environment");
    TreeIICSpec t;
    read_if(j, "m", t.m);
    read_if(j, "depth", t.depth);
    read_if(j, "max_vertices", t.max_vertices);
    return t;
  }
  if (kind == "lattice") {
    reject_unknown_keys(j, {"kind", "d", "L", "p", "keep_level", "survive_level", "max_attempts"},
                        "lattice environment");
    LatticeIICSpec l;
    read_if(j, "d", l.d);
    read_if(j, "L", l.L);
    read_if(j, "p", l.p);
    read_if(j, "keep_level", l.keep_level);
    read_if(j, "survive_level", l.survive_level);
    read_if(j, "max_attempts", l.max_attempts);
    return l;
  }
  if (kind == "fixture") {
    reject_unknown_keys(j, {"kind", "name", "size"}, "fixture environment");
    FixtureSpec f;
    read_if(j, "name", f.name);
    read_if(j, "size", f.size);
    if (f.name != "line" && f.name != "comb")
      throw InvalidArgument("unknown fixture '" + f.name + "' (expected line or comb)");
    return f;
  }
  throw InvalidArgument("unknown environment kind '" + kind + "'");
}

json environment_to_json(const EnvironmentSpec& env) {
  if (const auto* t = std::get_if<TreeIICSpec>(&env))
    return {{"kind", "tree"}, {"m", t->m}, {"depth", t->depth}, {"max_vertices", t->max_vertices}};
  if (const auto* l = std::get_if<LatticeIICSpec>(&env))
    return {{"kind", "lattice"},          {"d", l->d},
            {"L", l->L},                  {"p", l->p},
            {"keep_level", l->keep_level}, {"survive_level", l->survive_level},
            {"max_attempts", l->max_attempts}};
  const auto& f = std::get<FixtureSpec>(env);
  return {{"kind", "fixture"}, {"name", f.name}, {"size", f.size}};
}

int return_radius(std::int64_t n) {
  const auto cube = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
  return static_cast<int>(std::min<std::int64_t>(n + 1, std::max(32, 8 * cube)));
}

bool is_walk_observable(Observable o) {
  return o == Observable::exit_time || o == Observable::range || o == Observable::displacement;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  if (quoted) throw InvalidArgument("unterminated quote in CSV line");
  return out;
}

template <class T>
T parse_number(const std::string& s, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument(std::string("bad value '") + s + "' in column " + column);
  return v;
}

double parse_double(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  return parse_number<double>(s, "value");
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

}  // namespace

std::string to_string(Observable o) {
  for (const auto& [k, name] : kObservableNames)
    if (k == o) return name;
  throw std::logic_error("unnamed observable");
}

Observable parse_observable(const std::string& name) {
  for (const auto& [k, n] : kObservableNames)
    if (name == n) return k;
  throw InvalidArgument("unknown observable '" + name + "'");
}

int required_margin(Observable o, std::int64_t scale) {
  switch (o) {
    case Observable::range:
    case Observable::displacement:
      return static_cast<int>(scale + 1);
    case Observable::return_prob:
      return return_radius(scale);
    case Observable::moments:
      return 0;
    default:
      return static_cast<int>(scale);
  }
}

void ExperimentConfig::validate() const {
  if (experiment_id.empty() ||
      experiment_id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
          std::string::npos)
    throw InvalidArgument("experiment_id must be a nonempty [A-Za-z0-9_.-] name");
  if (scales.empty()) throw InvalidArgument("scales must be nonempty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1) throw InvalidArgument("scales must be >= 1");
    if (i > 0 && scales[i] <= scales[i - 1]) throw InvalidArgument("scales must be strictly increasing");
    if (scales[i] > (1 << 20)) throw InvalidArgument("scale too large");
  }
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (walks < 1) throw InvalidArgument("walks must be >= 1");
  if (checkpoint_interval < 1) throw InvalidArgument("checkpoint_interval must be >= 1");
  if (!(b0 > 0.0)) throw InvalidArgument("b0 must be positive");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  for (double l : lambdas)
    if (!(l > 0.0)) throw InvalidArgument("lambdas must be positive");
  if (fit_window && fit_window->first > fit_window->second)
    throw InvalidArgument("fit_window must be [lo, hi] with lo <= hi");
  if (observable == Observable::moments && scales.back() > kMaxMomentLegs)
    throw InvalidArgument("moments scales are leg counts r <= " + std::to_string(kMaxMomentLegs));
  if (const auto* f = std::get_if<FixtureSpec>(&environment)) {
    if (observable == Observable::cutset)
      throw InvalidArgument("cutset needs an oriented cluster environment, not a fixture");
    if (f->size > 0)
      for (auto s : scales)
        if (required_margin(observable, s) > f->size)
          throw InvalidArgument("scale " + std::to_string(s) + " needs truncation margin " +
                                std::to_string(required_margin(observable, s)) + " but fixture " +
                                f->name + " has " + std::to_string(f->size));
  }
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"experiment_id", "environment", "observable", "scales", "trials", "walks", "seed",
                       "output_dir", "checkpoint_interval", "fit_window", "lambda", "lambdas", "b0",
                       "exit_cap", "threads"},
                      "experiment config");
  ExperimentConfig c;
  read_if(j, "experiment_id", c.experiment_id);
  if (j.contains("environment")) c.environment = environment_from_json(j.at("environment"));
  if (j.contains("observable")) c.observable = parse_observable(j.at("observable").get<std::string>());
  read_if(j, "scales", c.scales);
  read_if(j, "trials", c.trials);
  read_if(j, "walks", c.walks);
  read_if(j, "seed", c.seed);
  read_if(j, "output_dir", c.output_dir);
  read_if(j, "checkpoint_interval", c.checkpoint_interval);
  if (j.contains("fit_window") && !j.at("fit_window").is_null()) {
    const auto w = j.at("fit_window").get<std::vector<std::int64_t>>();
    if (w.size() != 2) throw InvalidArgument("fit_window must be [lo, hi]");
    c.fit_window = std::pair{w[0], w[1]};
  }
  read_if(j, "lambda", c.lambda);
  read_if(j, "lambdas", c.lambdas);
  read_if(j, "b0", c.b0);
  read_if(j, "exit_cap", c.exit_cap);
  read_if(j, "threads", c.threads);
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j = {{"experiment_id", c.experiment_id},
            {"environment", environment_to_json(c.environment)},
            {"observable", to_string(c.observable)},
            {"scales", c.scales},
            {"trials", c.trials},
            {"walks", c.walks},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"checkpoint_interval", c.checkpoint_interval},
            {"lambda", c.lambda},
            {"lambdas", c.lambdas},
            {"b0", c.b0},
            {"exit_cap", c.exit_cap},
            {"threads", c.threads}};
  j["fit_window"] = c.fit_window ? json::array({c.fit_window->first, c.fit_window->second}) : json();
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string environment_name(const EnvironmentSpec& env) {
  std::ostringstream os;
  if (const auto* t = std::get_if<TreeIICSpec>(&env)) {
    os << "tree-m" << t->m;
  } else if (const auto* l = std::get_if<LatticeIICSpec>(&env)) {
    os << "lattice-d" << l->d << "-L" << l->L << "-p" << format_double(l->p);
  } else {
    const auto& f = std::get<FixtureSpec>(env);
    os << "fixture-" << f.name;
    if (f.size > 0) os << "-" << f.size;
  }
  return os.str();
}

ClusterGraph make_environment(const EnvironmentSpec& env, std::uint64_t seed, int margin) {
  if (const auto* f = std::get_if<FixtureSpec>(&env)) {
    const int size = f->size > 0 ? f->size : std::max(margin, 2);
    if (size < margin)
      throw InvalidArgument("fixture " + f->name + " of size " + std::to_string(size) +
                            " is smaller than the required margin " + std::to_string(margin));
    Graph g = f->name == "line" ? build_line(size) : build_comb(size);
    return {std::move(g), {}, size, {}, {}};
  }
  const IICSampleSpec spec = std::holds_alternative<TreeIICSpec>(env)
                                 ? IICSampleSpec{std::get<TreeIICSpec>(env)}
                                 : IICSampleSpec{std::get<LatticeIICSpec>(env)};
  return sample_environment(spec, seed, std::max(margin, 1));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::logic_error("to_chars failed");
  return {buf, ptr};
}

std::string csv_line(const Row& r) {
  std::string s;
  s += csv_field(r.experiment_id) + ',';
  s += csv_field(r.environment) + ',';
  s += std::to_string(r.scale) + ',';
  s += std::to_string(r.trial) + ',';
  s += std::to_string(r.seed) + ',';
  s += csv_field(r.observable) + ',';
  s += format_double(r.value) + ',';
  s += std::to_string(r.censored) + ',';
  s += csv_field(r.extra_json);
  return s;
}

std::vector<Row> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
  if (line != kCsvHeader) throw InvalidArgument("CSV header mismatch: got '" + line + "'");
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9)
      throw InvalidArgument("CSV line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                            " fields, expected 9");
    Row r;
    r.experiment_id = f[0];
    r.environment = f[1];
    r.scale = parse_number<std::int64_t>(f[2], "scale");
    r.trial = parse_number<std::uint64_t>(f[3], "trial");
    r.seed = parse_number<std::uint64_t>(f[4], "seed");
    r.observable = f[5];
    r.value = parse_double(f[6]);
    r.censored = parse_number<std::int64_t>(f[7], "censored");
    r.extra_json = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Row> read_csv(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_csv(is);
}

std::uint64_t task_seed(std::uint64_t master, std::int64_t scale, std::uint64_t trial) {
  return derive_seed(master, scale, trial);
}

Row measure(const ExperimentConfig& c, std::int64_t scale, std::uint64_t trial) {
  Row row;
  row.experiment_id = c.experiment_id;
  row.environment = environment_name(c.environment);
  row.scale = scale;
  row.trial = trial;
  row.seed = task_seed(c.seed, scale, trial);
  row.observable = to_string(c.observable);
  const std::uint64_t env_seed = derive_seed(row.seed, 0);
  const int s = static_cast<int>(scale);
  json extra = json::object();

  if (c.observable == Observable::moments) {
    const MomentQuery q{s, std::vector<double>(static_cast<std::size_t>(s), 1.0), 1e-3};
    row.value = m_hat(q);
    const double closed = m_hat_closed_equal(s, 1.0);
    extra["closed_form"] = closed;
    extra["abs_err"] = std::abs(row.value - closed);
    row.extra_json = extra.dump();
    return row;
  }

  if (c.observable == Observable::return_prob) {
    int radius = return_radius(scale);
    const int k = 2 * s;
    for (;;) {
      const auto env = make_environment(c.environment, env_seed, radius);
      const auto series = return_probability_series(env.graph, env.graph.root(), k, radius);
      const double value = series.value[k];
      const double bound = series.bound[k];
      if (bound <= 1e-9 * value) {
        row.value = value;
        extra["radius"] = radius;
        extra["bound"] = bound;
        break;
      }
      const auto* f = std::get_if<FixtureSpec>(&c.environment);
      if ((f && f->size > 0 && 2 * radius > f->size) || radius > (1 << 16))
        throw BudgetExceeded("return probability at n=" + std::to_string(s) +
                             " not certified: truncation bound " + format_double(bound));
      radius = f && f->size > 0 ? std::min(2 * radius, f->size) : 2 * radius;
    }
    row.extra_json = extra.dump();
    return row;
  }

  const int margin = required_margin(c.observable, scale);
  const auto env = make_environment(c.environment, env_seed, margin);
  const Graph& g = env.graph;

  if (is_walk_observable(c.observable)) {
    WalkEngine engine(g);
    RunningStats stats, sizes;
    std::vector<double> values;
    const std::int64_t cap = c.exit_cap > 0 ? c.exit_cap : default_exit_cap(s);
    const std::int64_t checkpoint[] = {scale};
    for (std::size_t w = 0; w < c.walks; ++w) {
      const std::uint64_t ws = derive_seed(row.seed, 1, w);
      double v = 0.0;
      if (c.observable == Observable::exit_time) {
        const auto e = engine.exit_time(g.root(), s, cap, ws);
        v = static_cast<double>(e.time);
        row.censored += e.censored;
      } else {
        const auto p = engine.profile(g.root(), checkpoint, ws);
        v = c.observable == Observable::range ? static_cast<double>(p.range_measure[0])
                                              : static_cast<double>(p.max_displacement[0]);
        sizes.add(static_cast<double>(p.range_size[0]));
      }
      stats.add(v);
      values.push_back(v);
    }
    row.value = stats.mean();
    extra["walks"] = c.walks;
    extra["std_error"] = stats.std_error();
    extra["median"] = quantile(values, 0.5);
    if (c.observable == Observable::exit_time) extra["cap"] = cap;
    if (c.observable == Observable::range) extra["mean_range_size"] = sizes.mean();
    extra["vertices"] = g.num_vertices();
    row.extra_json = extra.dump();
    return row;
  }

  switch (c.observable) {
    case Observable::volume:
      row.value = static_cast<double>(ball(g, g.root(), s).volume);
      break;
    case Observable::resistance:
      row.value = ball_volume_and_resistance(g, s).second;
      break;
    case Observable::j_check: {
      const auto [volume, reff] = ball_volume_and_resistance(g, s);
      const auto rep = evaluate_J(s, c.lambda, volume, reff);
      row.value = rep.in_J ? 1.0 : 0.0;
      extra = {{"lambda", c.lambda},         {"volume", volume},
               {"resistance", reff},         {"vol_upper", rep.vol_upper},
               {"vol_lower", rep.vol_lower}, {"res_lower", rep.res_lower}};
      break;
    }
    case Observable::cutset: {
      const auto rep = cutset_bound(env, s, true);
      row.value = rep.lower_bound;
      extra = {{"exact_resistance", rep.exact_resistance}, {"sizes", rep.sizes}};
      break;
    }
    default:
      throw std::logic_error("unhandled observable");
  }
  row.extra_json = extra.dump();
  return row;
}

namespace {

std::map<std::int64_t, std::vector<const Row*>> group_by_scale(std::span<const Row> rows,
                                                               const std::string& observable) {
  std::map<std::int64_t, std::vector<const Row*>> by;
  for (const auto& r : rows)
    if (r.observable == observable) by[r.scale].push_back(&r);
  return by;
}

}  // namespace

std::vector<ScaleAggregate> aggregate(std::span<const Row> rows, const std::string& observable,
                                      std::uint64_t seed) {
  std::vector<ScaleAggregate> out;
  for (const auto& [scale, group] : group_by_scale(rows, observable)) {
    ScaleAggregate a;
    a.scale = scale;
    a.count = group.size();
    RunningStats st;
    std::vector<double> values;
    for (const Row* r : group) {
      st.add(r->value);
      values.push_back(r->value);
      a.censored += r->censored;
    }
    a.mean = st.mean();
    a.std_error = st.std_error();
    a.ci95 = bootstrap_mean_ci(values, derive_seed(seed, scale));
    out.push_back(a);
  }
  return out;
}

ExponentFit fit_exponent(std::span<const Row> rows, const std::string& observable,
                         std::optional<std::pair<std::int64_t, std::int64_t>> window,
                         std::uint64_t seed, std::size_t resamples) {
  const auto by = group_by_scale(rows, observable);
  if (by.empty()) throw InvalidArgument("no rows for observable " + observable);
  if (!window) {
    if (by.size() < 2) throw InvalidArgument("need at least 3 scales to fit");
    window = std::pair{std::next(by.begin())->first, by.rbegin()->first};
  }
  std::vector<double> scales;
  std::vector<std::vector<double>> groups;
  for (const auto& [scale, group] : by) {
    if (scale < window->first || scale > window->second) continue;
    std::vector<double> values;
    for (const Row* r : group) {
      if (!(r->value > 0.0))
        throw InvalidArgument("nonpositive statistic " + format_double(r->value) + " in row (" +
                              r->experiment_id + ", scale " + std::to_string(r->scale) + ", trial " +
                              std::to_string(r->trial) + ")");
      values.push_back(r->value);
    }
    scales.push_back(static_cast<double>(scale));
    groups.push_back(std::move(values));
  }
  if (scales.size() < 3)
    throw InvalidArgument("fit window [" + std::to_string(window->first) + ", " +
                          std::to_string(window->second) + "] holds " +
                          std::to_string(scales.size()) + " scales; at least 3 are required");

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::vector<double> lx, ly;
  ExponentFit fit;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double m = mean(groups[i]);
    fit.pairs.emplace_back(scales[i], m);
    lx.push_back(std::log(scales[i]));
    ly.push_back(std::log(m));
  }
  const LineFit lf = least_squares(lx, ly);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.stderr_slope = lf.slope_stderr;
  fit.fit_window = *window;

  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<double> boot_y(scales.size()), draw;
  for (std::size_t b = 0; b < resamples; ++b) {
    CounterRng rng(derive_seed(seed, 0x666974ULL, b));
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto& g = groups[i];
      draw.assign(g.size(), 0.0);
      for (auto& x : draw) x = g[rng.below(g.size())];
      boot_y[i] = std::log(mean(draw));
    }
    slopes.push_back(least_squares(lx, boot_y).slope);
  }
  fit.ci95 = {quantile(slopes, 0.025), quantile(slopes, 0.975)};
  fit.ci95.lo = std::min(fit.ci95.lo, fit.slope);
  fit.ci95.hi = std::max(fit.ci95.hi, fit.slope);
  return fit;
}

json summary_json(const ExperimentConfig& c, std::span<const Row> rows) {
  const std::string obs = to_string(c.observable);
  json j;
  j["tool"] = "critwalk";
  j["version"] = tool_version();
  j["config_hash"] = config_hash(c);
  j["experiment_id"] = c.experiment_id;
  j["environment"] = environment_name(c.environment);
  j["observable"] = obs;
  j["rows"] = rows.size();
  json scales = json::array();
  for (const auto& a : aggregate(rows, obs, derive_seed(c.seed, 0x616767ULL)))
    scales.push_back({{"scale", a.scale},
                      {"count", a.count},
                      {"mean", a.mean},
                      {"std_error", a.std_error},
                      {"ci95", interval_json(a.ci95)},
                      {"censored", a.censored}});
  j["scales"] = std::move(scales);
  try {
    const auto fit = fit_exponent(rows, obs, c.fit_window, derive_seed(c.seed, 0x666974ULL));
    json pairs = json::array();
    for (const auto& [x, y] : fit.pairs) pairs.push_back({x, y});
    j["fit"] = {{"pairs", pairs},
                {"slope", fit.slope},
                {"intercept", fit.intercept},
                {"stderr", fit.stderr_slope},
                {"ci95", interval_json(fit.ci95)},
                {"fit_window", {fit.fit_window.first, fit.fit_window.second}}};
  } catch (const InvalidArgument& e) {
    j["fit"] = nullptr;
    j["fit_error"] = e.what();
  }
  return j;
}

RunResult run(const ExperimentConfig& c, const RunOptions& opts) {
  c.validate();
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  RunResult res;
  res.csv = dir / (c.experiment_id + ".csv");
  const fs::path ckpt = dir / (c.experiment_id + ".checkpoint.json");
  const fs::path summary = dir / (c.experiment_id + ".summary.json");
  const std::string hash = config_hash(c);
  res.tasks_total = c.scales.size() * c.trials;

  std::size_t completed = 0;
  auto save_checkpoint = [&](std::size_t done, std::uintmax_t bytes) {
    const json j = {{"config_hash", hash},
                    {"completed_tasks", done},
                    {"total_tasks", res.tasks_total},
                    {"csv_bytes", bytes}};
    write_atomic(ckpt, j.dump(2) + "\n");
  };

  if (opts.resume && fs::exists(ckpt)) {
    json j;
    {
      std::ifstream is(ckpt);
      j = json::parse(is);
    }
    if (j.at("config_hash").get<std::string>() != hash)
      throw InvalidArgument("checkpoint " + ckpt.string() + " was written by a different config (hash " +
                            j.at("config_hash").get<std::string>() + ", current " + hash +
                            "); refusing to resume");
    completed = j.at("completed_tasks").get<std::size_t>();
    const auto bytes = j.at("csv_bytes").get<std::uintmax_t>();
    if (!fs::exists(res.csv) || fs::file_size(res.csv) < bytes)
      throw std::runtime_error("CSV " + res.csv.string() + " is shorter than its checkpoint");
    fs::resize_file(res.csv, bytes);
  } else {
    std::ofstream os(res.csv, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + res.csv.string());
    os << kCsvHeader << '\n';
    os.close();
    fs::remove(summary);
    save_checkpoint(0, fs::file_size(res.csv));
  }

  std::ofstream os(res.csv, std::ios::binary | std::ios::app);
  if (!os) throw std::runtime_error("cannot append to " + res.csv.string());
  while (completed < res.tasks_total) {
    const std::size_t chunk = std::min(c.checkpoint_interval, res.tasks_total - completed);
    const std::size_t base = completed;
    const auto rows = parallel_map<Row>(chunk, c.threads, [&](std::size_t i) {
      const std::size_t task = base + i;
      return measure(c, c.scales[task / c.trials], task % c.trials);
    });
    for (const auto& r : rows) {
      os << csv_line(r) << '\n';
      ++completed;
      ++res.tasks_run;
      if (opts.stop_after > 0 && completed >= opts.stop_after) {
        os.flush();
        return res;
      }
    }
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + res.csv.string());
    save_checkpoint(completed, fs::file_size(res.csv));
  }
  os.close();

  const auto all = read_csv(res.csv);
  write_atomic(summary, summary_json(c, all).dump(2) + "\n");
  res.summary = summary;
  res.complete = true;
  return res;
}

json verify_assumption_suite(const ExperimentConfig& c) {
  c.validate();
  std::vector<double> lambdas = c.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  const bool fixture = std::holds_alternative<FixtureSpec>(c.environment);
  if (!fixture && c.trials < 30) throw InvalidArgument("the assumption suite needs at least 30 trials");

  json out;
  out["tool"] = "critwalk";
  out["version"] = tool_version();
  out["config_hash"] = config_hash(c);
  out["environment"] = environment_name(c.environment);
  out["trials"] = c.trials;
  out["lambdas"] = lambdas;
  out["b0"] = c.b0;
  json rows = json::array();
  bool all_monotone = true;
  std::vector<VolumeMoments> moments;
  for (auto scale : c.scales) {
    const int R = static_cast<int>(scale);
    const auto samples = parallel_map<JSample>(c.trials, c.threads, [&](std::size_t t) {
      const auto env = make_environment(c.environment, task_seed(c.seed, scale, t), R);
      const auto [volume, reff] = ball_volume_and_resistance(env.graph, R);
      return JSample{volume, reff};
    });
    const auto cells = p_lambda_from_samples(samples, R, lambdas);
    json jc = json::array();
    bool monotone = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& e = cells[i];
      if (i > 0 && e.fraction > cells[i - 1].fraction) monotone = false;
      jc.push_back({{"lambda", e.lambda},
                    {"failures", e.failures},
                    {"fraction", e.fraction},
                    {"ci95", interval_json(e.ci)},
                    {"vol_upper_fail", e.vol_upper_fail},
                    {"vol_lower_fail", e.vol_lower_fail},
                    {"res_lower_fail", e.res_lower_fail},
                    {"res_fail_times_lambda", e.res_lower_fail * e.lambda}});
    }
    all_monotone = all_monotone && monotone;
    std::vector<std::int64_t> volumes;
    for (const auto& s : samples) volumes.push_back(s.volume);
    const auto vm = volume_moments(volumes, R, c.b0, derive_seed(c.seed, 0x766f6cULL, scale));
    moments.push_back(vm);
    rows.push_back({{"R", R},
                    {"cells", jc},
                    {"monotone_in_lambda", monotone},
                    {"volume",
                     {{"mean_scaled", vm.mean_volume_scaled},
                      {"ci95", interval_json(vm.mean_volume_ci)},
                      {"mean_inverse_scaled", vm.mean_inverse_scaled},
                      {"ci95_inverse", interval_json(vm.mean_inverse_ci)},
                      {"jensen_ok", vm.jensen_ok},
                      {"lower_tail", {{"0.0625", vm.lower_tail(0.0625)}, {"0.25", vm.lower_tail(0.25)}}},
                      {"z_histogram",
                       {{"lo", vm.z_histogram.lo},
                        {"width", vm.z_histogram.width},
                        {"counts", vm.z_histogram.counts}}}}}});
  }
  out["rows"] = std::move(rows);
  json stability = json::array();
  bool all_stable = true;
  for (std::size_t i = 1; i < moments.size(); ++i) {
    const double rv = moments[i].mean_volume_scaled / moments[i - 1].mean_volume_scaled;
    const double ri = moments[i].mean_inverse_scaled / moments[i - 1].mean_inverse_scaled;
    const bool ok = rv >= 0.5 && rv <= 2.0 && ri >= 0.5 && ri <= 2.0;
    all_stable = all_stable && ok;
    stability.push_back({{"from", moments[i - 1].R},
                         {"to", moments[i].R},
                         {"volume_ratio", rv},
                         {"inverse_ratio", ri},
                         {"within_band", ok}});
  }
  out["stability"] = std::move(stability);
  out["all_monotone"] = all_monotone;
  out["all_stable"] = all_stable;
  return out;
}

std::string tool_version() { return CRITWALK_VERSION; }

}  // namespace critwalk
