#pragma once

// Discrete potential theory on unit-resistor networks: Dirichlet energy,
// effective resistance, Green functions killed on leaving a set, exact mean
// exit times and hitting probabilities.

#include <span>
#include <vector>

#include "critwalk/graph.hpp"

namespace critwalk {

struct SolverOptions {
  double relative_tolerance = 1e-10;
  /// CG iteration cap as a multiple of the number of unknowns.
  int iteration_factor = 20;
  /// Systems with fewer unknowns than this are factorized densely.
  std::size_t dense_threshold = 2000;
};

/// Solve L_FF u = rhs where L is the graph Laplacian (conductance =
/// multiplicity) restricted to the vertices with free[v] != 0. `rhs` and the
/// result are indexed by vertex; entries outside F are ignored / zero.
/// Returns the relative residual through `residual`.
std::vector<double> solve_grounded_laplacian(const Graph& g, std::span<const std::uint8_t> free,
                                             std::span<const double> rhs, double& residual,
                                             const SolverOptions& opts = {});

/// E(f, f) = 1/2 sum over ordered adjacent pairs of (f(x) - f(y))^2.
double dirichlet_energy(const Graph& g, std::span<const double> f);

struct ResistanceSolution {
  double value = 0.0;              // R_eff(A, B)
  std::vector<double> potential;   // 1 on A, 0 on B, harmonic elsewhere
  double residual = 0.0;
};

/// R_eff(A, B) = 1 / min{E(f,f) : f|A = 1, f|B = 0}. A and B must be nonempty
/// and disjoint.
ResistanceSolution effective_resistance(const Graph& g, std::span<const Vertex> a,
                                        std::span<const Vertex> b,
                                        const SolverOptions& opts = {});

/// Point-to-point resistance with R_eff(x, x) = 0.
double resistance_between(const Graph& g, Vertex x, Vertex y, const SolverOptions& opts = {});

/// R_eff(x, B(x0, r)^c) style helper: resistance from x to every vertex
/// outside `domain` (domain given as a membership mask).
double resistance_to_complement(const Graph& g, Vertex x, std::span<const std::uint8_t> domain,
                                const SolverOptions& opts = {});

/// One row x of the Green function g_B(x, .) killed on leaving B.
struct GreenRow {
  Vertex source = 0;
  std::vector<std::uint8_t> domain;  // membership mask of B
  std::vector<double> values;        // g_B(x, y); zero off B
  double residual = 0.0;
};

/// Row g_B(x, .): the potential of a unit current from x to B^c, i.e. the
/// solution of L_BB u = e_x. Requires x in B and B^c nonempty.
GreenRow green_function(const Graph& g, std::span<const Vertex> domain, Vertex x,
                        const SolverOptions& opts = {});

/// E^z tau_B = sum_{y in B} g_B(z, y) mu_y.
double expected_exit_time_exact(const Graph& g, std::span<const Vertex> domain, Vertex z,
                                const SolverOptions& opts = {});

struct HittingResult {
  double probability = 0.0;    // P^x(T_A < T_B)
  double reff_to_a = 0.0;      // R_eff(x, A)
  double reff_to_b = 0.0;      // R_eff(x, B)
  double resistance_ratio = 0.0;  // R_eff(x, B) / R_eff(x, A), an upper bound
};

HittingResult hitting_prob_exact(const Graph& g, Vertex x, std::span<const Vertex> a,
                                 std::span<const Vertex> b, const SolverOptions& opts = {});

/// Membership mask for a vertex list; throws on out-of-range ids.
std::vector<std::uint8_t> to_mask(const Graph& g, std::span<const Vertex> vertices);

}  // namespace critwalk
