#pragma once

// Immutable rooted multigraphs, shortest-path distances, balls and volumes,
// plus the deterministic fixtures used throughout the test suites.
//
// Graphs here are finite truncations of infinite graphs. Vertices whose
// neighbourhood was cut by the truncation are marked as "frontier"; every
// consumer checks that its computation cannot see a frontier vertex, so the
// truncation never changes a result.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace critwalk {

using Vertex = std::int32_t;

struct Edge {
  Vertex u;
  Vertex v;
};

inline constexpr int kUnreachable = -1;
inline constexpr int kNoFrontier = std::numeric_limits<int>::max();

class Graph {
 public:
  /// Build from dense vertex ids [0, n). Parallel edges are kept with
  /// multiplicity; self-loops are rejected. Throws InvalidArgument if the
  /// graph is disconnected or the root is out of range.
  ///
  /// `levels`, `labels` and `frontier` are optional side tables: empty, or
  /// one entry per vertex.
  Graph(std::size_t num_vertices, std::span<const Edge> edges, Vertex root,
        std::vector<int> levels = {}, std::vector<std::int64_t> labels = {},
        std::vector<std::uint8_t> frontier = {});

  std::size_t num_vertices() const noexcept { return offsets_.size() - 1; }
  /// Undirected edge count, with multiplicity.
  std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }

  Vertex root() const noexcept { return root_; }

  /// Sorted neighbour list of v; a neighbour joined by k parallel edges
  /// appears k times.
  std::span<const Vertex> neighbors(Vertex v) const noexcept {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  /// mu_v: number of incident edge-ends.
  int degree(Vertex v) const noexcept {
    return static_cast<int>(offsets_[v + 1] - offsets_[v]);
  }

  bool has_levels() const noexcept { return !levels_.empty(); }
  int level(Vertex v) const { return levels_.at(v); }
  const std::vector<int>& levels() const noexcept { return levels_; }

  /// Original label of a vertex (the dense id when no label table was given).
  std::int64_t label(Vertex v) const noexcept {
    return labels_.empty() ? v : labels_[v];
  }
  bool has_labels() const noexcept { return !labels_.empty(); }
  std::optional<Vertex> find_label(std::int64_t label) const;

  bool has_frontier() const noexcept { return !frontier_.empty(); }
  bool is_frontier(Vertex v) const noexcept {
    return !frontier_.empty() && frontier_[v] != 0;
  }
  const std::vector<std::uint8_t>& frontier() const noexcept { return frontier_; }

  /// Graph distance from x to the nearest frontier vertex, or kNoFrontier.
  /// A walk of fewer steps than this, and any ball of at most this radius,
  /// is unaffected by the truncation.
  int truncation_margin(Vertex x) const;

  bool contains(Vertex v) const noexcept {
    return v >= 0 && static_cast<std::size_t>(v) < num_vertices();
  }

  std::span<const std::int64_t> offsets() const noexcept { return offsets_; }
  std::span<const Vertex> adjacency() const noexcept { return adjacency_; }

  /// Each undirected edge once (u <= v), repeated by multiplicity, in
  /// ascending order.
  std::vector<Edge> edges() const;

 private:
  std::vector<std::int64_t> offsets_;
  std::vector<Vertex> adjacency_;
  Vertex root_;
  std::vector<int> levels_;
  std::vector<std::int64_t> labels_;
  std::vector<std::uint8_t> frontier_;
};

/// Build a graph from labelled edges. Labels are reindexed densely in
/// ascending label order, which makes the vertex order deterministic.
/// Throws InvalidArgument on an empty edge list, a root label that does not
/// occur, or a disconnected result (the message lists the stray component).
Graph build_graph(std::span<const std::pair<std::int64_t, std::int64_t>> edges,
                  std::int64_t root_label);

/// Breadth-first hop distances from x; kUnreachable beyond max_radius.
std::vector<int> bfs_distances(const Graph& g, Vertex x,
                               int max_radius = std::numeric_limits<int>::max());

int distance(const Graph& g, Vertex x, Vertex y);

struct Ball {
  Vertex center;
  int radius;
  std::vector<Vertex> members;  // ascending
  std::int64_t volume;          // sum of mu over members
};

/// B(x, r) = {y : d(x, y) < r}, strict inequality. Requires r >= 1.
Ball ball(const Graph& g, Vertex x, int r);

// ---------------------------------------------------------------------------
// Fixtures

/// Path on n >= 2 vertices 0..n-1, rooted at 0.
Graph build_path(int n);

/// Cycle on n >= 3 vertices, rooted at 0.
Graph build_cycle(int n);

/// Integer segment {-half_width..half_width} rooted at 0, labels equal to the
/// integer coordinate. The two end vertices are frontier (the line continues).
Graph build_line(int half_width);

/// Truncation of the comb graph to horizontal range [-r_max, r_max]: the
/// horizontal axis, plus for each 1 <= n <= r_max a vertical tooth of height n
/// at n. Rooted at (0,0). The two horizontal ends are frontier.
Graph build_comb(int r_max);

/// Label used by build_comb for the vertex (n, m).
std::int64_t comb_label(int n, int m, int r_max);
std::pair<int, int> comb_coordinates(std::int64_t label, int r_max);

// ---------------------------------------------------------------------------
// Edge-list text format:
//   # root <label>
//   # level <label> <n>        (optional, one per vertex)
//   # frontier <label>         (optional)
//   u v                        (one line per edge, repeated for multiplicity)

void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);

}  // namespace critwalk
