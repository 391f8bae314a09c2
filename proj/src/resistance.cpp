#include "critwalk/resistance.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "critwalk/errors.hpp"

namespace critwalk {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Compact indexing of the free vertices.
struct FreeIndex {
  std::vector<Vertex> vertices;  // compact -> vertex
  std::vector<std::int32_t> slot;  // vertex -> compact or -1
};

FreeIndex index_free(const Graph& g, std::span<const std::uint8_t> free) {
  FreeIndex fi;
  fi.slot.assign(g.num_vertices(), -1);
  for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v) {
    if (free[v]) {
      fi.slot[v] = static_cast<std::int32_t>(fi.vertices.size());
      fi.vertices.push_back(v);
    }
  }
  return fi;
}

// y = L_FF x on compact vectors.
void apply_grounded(const Graph& g, const FreeIndex& fi, const std::vector<double>& x,
                    std::vector<double>& y) {
  for (std::size_t i = 0; i < fi.vertices.size(); ++i) {
    const Vertex v = fi.vertices[i];
    double acc = g.degree(v) * x[i];
    for (Vertex w : g.neighbors(v)) {
      const auto j = fi.slot[w];
      if (j >= 0) acc -= x[j];
    }
    y[i] = acc;
  }
}

std::vector<double> solve_dense(const Graph& g, const FreeIndex& fi, const std::vector<double>& b) {
  const auto n = static_cast<Eigen::Index>(fi.vertices.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vertex v = fi.vertices[i];
    lap(i, i) = g.degree(v);
    for (Vertex w : g.neighbors(v)) {
      const auto j = fi.slot[w];
      if (j >= 0) lap(i, j) -= 1.0;
    }
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  Eigen::LLT<Eigen::MatrixXd> llt(lap);
  if (llt.info() != Eigen::Success)
    throw SolverError("grounded Laplacian is not positive definite", INFINITY);
  Eigen::VectorXd x = llt.solve(rhs);
  return {x.data(), x.data() + n};
}

// Jacobi-preconditioned conjugate gradient.
std::vector<double> solve_cg(const Graph& g, const FreeIndex& fi, const std::vector<double>& b,
                             const SolverOptions& opts) {
  const std::size_t n = fi.vertices.size();
  std::vector<double> x(n, 0.0), r(b), z(n), p(n), q(n), inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / g.degree(fi.vertices[i]);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return x;
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  const std::size_t max_iter = static_cast<std::size_t>(opts.iteration_factor) * n;
  double res = 1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply_grounded(g, fi, p, q);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    res = norm2(r) / bnorm;
    if (res <= opts.relative_tolerance) return x;
    double rz_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = inv_diag[i] * r[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("conjugate gradient did not converge in " + std::to_string(max_iter) +
                        " iterations",
                    res);
}

void require_nonempty(std::span<const Vertex> s, const char* name) {
  if (s.empty()) throw InvalidArgument(std::string(name) + " must be nonempty");
}

}  // namespace

std::vector<std::uint8_t> to_mask(const Graph& g, std::span<const Vertex> vertices) {
  std::vector<std::uint8_t> mask(g.num_vertices(), 0);
  for (Vertex v : vertices) {
    if (!g.contains(v)) throw InvalidArgument("vertex " + std::to_string(v) + " out of range");
    mask[v] = 1;
  }
  return mask;
}

std::vector<double> solve_grounded_laplacian(const Graph& g, std::span<const std::uint8_t> free,
                                             std::span<const double> rhs, double& residual,
                                             const SolverOptions& opts) {
  const FreeIndex fi = index_free(g, free);
  std::vector<double> b(fi.vertices.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = rhs[fi.vertices[i]];
  std::vector<double> x = fi.vertices.size() < opts.dense_threshold ? solve_dense(g, fi, b)
                                                                    : solve_cg(g, fi, b, opts);
  std::vector<double> lx(x.size());
  apply_grounded(g, fi, x, lx);
  for (std::size_t i = 0; i < lx.size(); ++i) lx[i] -= b[i];
  const double bnorm = norm2(b);
  residual = bnorm > 0.0 ? norm2(lx) / bnorm : norm2(lx);
  if (!(residual <= std::max(opts.relative_tolerance, 1e-8)))
    throw SolverError("grounded Laplacian solve inaccurate", residual);
  std::vector<double> out(g.num_vertices(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) out[fi.vertices[i]] = x[i];
  return out;
}

double dirichlet_energy(const Graph& g, std::span<const double> f) {
  if (f.size() != g.num_vertices()) throw InvalidArgument("potential size mismatch");
  double e = 0.0;
  for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v)
    for (Vertex w : g.neighbors(v)) {
      const double d = f[v] - f[w];
      e += d * d;
    }
  return 0.5 * e;
}

ResistanceSolution effective_resistance(const Graph& g, std::span<const Vertex> a,
                                        std::span<const Vertex> b, const SolverOptions& opts) {
  require_nonempty(a, "source set A");
  require_nonempty(b, "sink set B");
  const auto in_a = to_mask(g, a);
  const auto in_b = to_mask(g, b);
  for (Vertex v : b)
    if (in_a[v]) throw InvalidArgument("source and sink sets overlap at vertex " + std::to_string(v));

  const std::size_t n = g.num_vertices();
  ResistanceSolution sol;
  sol.potential.assign(n, 0.0);
  std::vector<std::uint8_t> free(n, 0);
  std::vector<double> rhs(n, 0.0);
  bool any_free = false;
  for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v) {
    if (in_a[v]) {
      sol.potential[v] = 1.0;
    } else if (!in_b[v]) {
      free[v] = 1;
      any_free = true;
      for (Vertex w : g.neighbors(v))
        if (in_a[w]) rhs[v] += 1.0;
    }
  }
  if (any_free) {
    auto u = solve_grounded_laplacian(g, free, rhs, sol.residual, opts);
    for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v)
      if (free[v]) sol.potential[v] = std::clamp(u[v], 0.0, 1.0);
  }
  sol.value = 1.0 / dirichlet_energy(g, sol.potential);
  return sol;
}

double resistance_between(const Graph& g, Vertex x, Vertex y, const SolverOptions& opts) {
  if (x == y) return 0.0;
  const Vertex a[] = {x};
  const Vertex b[] = {y};
  return effective_resistance(g, a, b, opts).value;
}

double resistance_to_complement(const Graph& g, Vertex x, std::span<const std::uint8_t> domain,
                                const SolverOptions& opts) {
  std::vector<Vertex> outside;
  for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v)
    if (!domain[v]) outside.push_back(v);
  const Vertex a[] = {x};
  return effective_resistance(g, a, outside, opts).value;
}

GreenRow green_function(const Graph& g, std::span<const Vertex> domain, Vertex x,
                        const SolverOptions& opts) {
  require_nonempty(domain, "domain B");
  GreenRow row;
  row.source = x;
  row.domain = to_mask(g, domain);
  if (!g.contains(x) || !row.domain[x]) throw InvalidArgument("source vertex is not in the domain");
  const auto inside = static_cast<std::size_t>(std::count(row.domain.begin(), row.domain.end(), 1));
  if (inside == g.num_vertices()) throw InvalidArgument("domain complement is empty");
  std::vector<double> rhs(g.num_vertices(), 0.0);
  rhs[x] = 1.0;
  row.values = solve_grounded_laplacian(g, row.domain, rhs, row.residual, opts);
  return row;
}

double expected_exit_time_exact(const Graph& g, std::span<const Vertex> domain, Vertex z,
                                const SolverOptions& opts) {
  const GreenRow row = green_function(g, domain, z, opts);
  double t = 0.0;
  for (Vertex y = 0; static_cast<std::size_t>(y) < g.num_vertices(); ++y)
    if (row.domain[y]) t += row.values[y] * g.degree(y);
  return t;
}

HittingResult hitting_prob_exact(const Graph& g, Vertex x, std::span<const Vertex> a,
                                 std::span<const Vertex> b, const SolverOptions& opts) {
  require_nonempty(a, "target set A");
  require_nonempty(b, "target set B");
  if (!g.contains(x)) throw InvalidArgument("start vertex out of range");
  const auto in_a = to_mask(g, a);
  const auto in_b = to_mask(g, b);
  if (in_a[x] || in_b[x]) throw InvalidArgument("start vertex must lie outside A and B");
  HittingResult out;
  // P^x(T_A < T_B) is the equilibrium potential pinned to 1 on A, 0 on B.
  out.probability = effective_resistance(g, a, b, opts).potential[x];
  const Vertex src[] = {x};
  out.reff_to_a = effective_resistance(g, src, a, opts).value;
  out.reff_to_b = effective_resistance(g, src, b, opts).value;
  out.resistance_ratio = out.reff_to_b / out.reff_to_a;
  return out;
}

}  // namespace critwalk
