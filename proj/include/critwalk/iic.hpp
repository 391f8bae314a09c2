#pragma once

// Incipient-infinite-cluster samplers.
//
//  * Lattice: the forward cluster of the origin conditioned on reaching a
//    survival level, by rejection sampling, then truncated to a kept level.
//  * Tree: the Kesten construction for a critical Binomial(m, 1/m)
//    Galton-Watson tree: an infinite spine with size-biased offspring, the
//    non-spine children rooting independent critical bushes.

#include <cstdint>
#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "critwalk/percolation.hpp"

namespace critwalk {

struct LatticeIICSpec {
  int d = 1;
  int L = 1;
  double p = 0.5;
  int keep_level = 1;     // levels kept in the returned cluster
  int survive_level = 2;  // conditioning level, >= 2 * keep_level
  std::uint64_t max_attempts = 10'000'000;
};

struct TreeIICSpec {
  int m = 2;       // offspring law Binomial(m, 1/m)
  int depth = 1;   // generations 0..depth are generated
  std::size_t max_vertices = 60'000'000;
};

using IICSampleSpec = std::variant<LatticeIICSpec, TreeIICSpec>;

struct LatticeIICSample {
  ClusterGraph cluster;
  std::uint64_t attempts = 0;    // configurations drawn, including the accepted one
  std::uint64_t rejections = 0;  // attempts - 1
};

/// Throws InvalidArgument on a spec violating survive_level >= 2 * keep_level,
/// and BudgetExceeded after max_attempts rejections.
LatticeIICSample sample_iic_lattice(const LatticeIICSpec& spec, std::uint64_t seed);

/// Kesten tree truncated at `depth`. Level labels are generations, the root
/// is spine generation 0, vertices of generation `depth` are frontier. Lower
/// generations do not depend on `depth` (prefix-consistent in depth for a
/// fixed seed). Throws BudgetExceeded if the expected size exceeds
/// max_vertices, before allocating.
ClusterGraph sample_iic_tree(const TreeIICSpec& spec, std::uint64_t seed);

/// Expected number of vertices of the depth-truncated Kesten tree.
double expected_tree_size(int m, int depth);

/// Uniform dispatch over both kinds. `margin` is the smallest truncation
/// margin the caller needs at the root: trees are grown to depth
/// max(depth, margin); lattice clusters keep max(keep_level, margin) levels
/// and condition on at least twice that.
ClusterGraph sample_environment(const IICSampleSpec& spec, std::uint64_t seed, int margin);

/// Exact conditional law Q_n restricted to the kept levels: the distribution
/// of the set of open bonds of the origin's cluster with tail level below
/// keep_level, given (0,0) -> n.
struct QnDistribution {
  int bond_count = 0;
  double survival_probability = 0.0;
  std::map<std::vector<Bond>, double> outcomes;

  double probability(const std::function<bool(const std::vector<Bond>&)>& event) const;
};

/// Exhaustive enumeration over the 2^(#bonds) configurations of the light
/// cone below level n. Throws InvalidArgument when #bonds > 24 or when
/// survival has probability zero.
QnDistribution brute_force_qn(int d, int L, double p, int n, int keep_level);

/// Number of bonds in the light cone of the origin below level n.
std::int64_t cone_bond_count(int d, int L, int n);

}  // namespace critwalk
