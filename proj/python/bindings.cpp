#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "critwalk/cutsets.hpp"
#include "critwalk/errors.hpp"
#include "critwalk/experiments.hpp"
#include "critwalk/iic.hpp"
#include "critwalk/moments.hpp"
#include "critwalk/resistance.hpp"
#include "critwalk/walk.hpp"

namespace py = pybind11;
using namespace critwalk;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python side parses it with the json module.
ExperimentConfig config_from_text(const std::string& text) { return config_from_json(json::parse(text)); }

py::dict row_dict(const Row& r) {
  py::dict d;
  d["experiment_id"] = r.experiment_id;
  d["environment"] = r.environment;
  d["scale"] = r.scale;
  d["trial"] = r.trial;
  d["seed"] = r.seed;
  d["observable"] = r.observable;
  d["value"] = r.value;
  d["censored"] = r.censored;
  d["extra_json"] = r.extra_json;
  return d;
}

Graph graph_from_edges(std::size_t n, const std::vector<std::pair<Vertex, Vertex>>& edges, Vertex root) {
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (const auto& [u, v] : edges) es.push_back({u, v});
  return Graph(n, es, root);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "critwalk core: campaigns, resistances, IIC samplers and moment recursions";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.attr("__version__") = tool_version();
  m.attr("CSV_HEADER") = std::string(kCsvHeader);

  m.def(
      "normalize_config",
      [](const std::string& text) {
        const auto c = config_from_text(text);
        c.validate();
        return to_json(c).dump();
      },
      py::arg("config_json"), "Validated config with defaults filled in, as JSON text.");
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(config_from_text(text)); },
      py::arg("config_json"));

  m.def(
      "run",
      [](const std::string& text, bool resume, std::size_t stop_after) {
        const auto c = config_from_text(text);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c, {resume, stop_after});
        }
        py::dict d;
        d["csv"] = r.csv;
        d["summary"] = r.summary.empty() ? py::object(py::none()) : py::cast(r.summary);
        d["tasks_total"] = r.tasks_total;
        d["tasks_run"] = r.tasks_run;
        d["complete"] = r.complete;
        return d;
      },
      py::arg("config_json"), py::arg("resume") = false, py::arg("stop_after") = 0,
      "Run a campaign; returns the output paths and task counts.");

  m.def(
      "read_csv",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& r : read_csv(path)) out.append(row_dict(r));
        return out;
      },
      py::arg("path"));

  m.def(
      "fit_exponent",
      [](const std::filesystem::path& csv, const std::string& observable,
         std::optional<std::pair<std::int64_t, std::int64_t>> window, std::uint64_t seed) {
        const auto rows = read_csv(csv);
        const auto f = fit_exponent(rows, observable, window, seed);
        py::dict d;
        d["slope"] = f.slope;
        d["intercept"] = f.intercept;
        d["stderr"] = f.stderr_slope;
        d["ci95"] = std::pair{f.ci95.lo, f.ci95.hi};
        d["pairs"] = f.pairs;
        d["fit_window"] = f.fit_window;
        return d;
      },
      py::arg("csv"), py::arg("observable"), py::arg("window") = py::none(), py::arg("seed") = 0);

  m.def(
      "verify_assumption_suite",
      [](const std::string& text) {
        const auto c = config_from_text(text);
        py::gil_scoped_release release;
        return verify_assumption_suite(c).dump();
      },
      py::arg("config_json"), "Assumption grid as JSON text.");

  m.def(
      "effective_resistance",
      [](std::size_t n, const std::vector<std::pair<Vertex, Vertex>>& edges, Vertex x, Vertex y) {
        return resistance_between(graph_from_edges(n, edges, 0), x, y);
      },
      py::arg("num_vertices"), py::arg("edges"), py::arg("x"), py::arg("y"));

  m.def(
      "return_probability_series",
      [](std::size_t n, const std::vector<std::pair<Vertex, Vertex>>& edges, Vertex x, int n_max, int radius) {
        const auto s = return_probability_series(graph_from_edges(n, edges, x), x, n_max, radius);
        return std::pair{s.value, s.bound};
      },
      py::arg("num_vertices"), py::arg("edges"), py::arg("x"), py::arg("n_max"), py::arg("radius"),
      "Killed return densities p_k(x, x) and their truncation bounds, k = 0..n_max.");

  m.def(
      "tree_generation_sizes",
      [](int m_, int depth, std::uint64_t seed) {
        const auto c = sample_iic_tree({m_, depth, 60'000'000}, seed);
        std::vector<std::int64_t> sizes(static_cast<std::size_t>(depth) + 1, 0);
        for (int lvl : c.graph.levels()) ++sizes[static_cast<std::size_t>(lvl)];
        return sizes;
      },
      py::arg("m"), py::arg("depth"), py::arg("seed"));

  m.def(
      "cutset_bound",
      [](int d, int L, double p, int keep_level, int survive_level, int R, std::uint64_t seed) {
        const auto s = sample_iic_lattice({d, L, p, keep_level, survive_level, 10'000'000}, seed);
        const auto rep = cutset_bound(s.cluster, R, true);
        py::dict out;
        out["sizes"] = rep.sizes;
        out["lower_bound"] = rep.lower_bound;
        out["exact_resistance"] = rep.exact_resistance;
        out["attempts"] = s.attempts;
        return out;
      },
      py::arg("d"), py::arg("L"), py::arg("p"), py::arg("keep_level"), py::arg("survive_level"), py::arg("R"),
      py::arg("seed"));

  m.def(
      "m_hat", [](const std::vector<double>& s, double grid) {
        return m_hat({static_cast<int>(s.size()), s, grid});
      },
      py::arg("s"), py::arg("grid") = 1e-3);
  m.def("m_hat_closed_equal", &m_hat_closed_equal, py::arg("r"), py::arg("t"));
  m.def(
      "z_moment",
      [](int l) {
        const auto z = z_moment(l);
        return py::make_tuple(z.value, z.bound);
      },
      py::arg("l"), "(E Z^l, bound) for 1 <= l <= 5.");
}
