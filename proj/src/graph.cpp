#include "critwalk/graph.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "critwalk/errors.hpp"

namespace critwalk {

Graph::Graph(std::size_t num_vertices, std::span<const Edge> edges, Vertex root,
             std::vector<int> levels, std::vector<std::int64_t> labels,
             std::vector<std::uint8_t> frontier)
    : root_(root),
      levels_(std::move(levels)),
      labels_(std::move(labels)),
      frontier_(std::move(frontier)) {
  if (num_vertices == 0) throw InvalidArgument("graph must have at least one vertex");
  if (num_vertices > static_cast<std::size_t>(std::numeric_limits<Vertex>::max()))
    throw InvalidArgument("too many vertices for 32-bit ids");
  if (root < 0 || static_cast<std::size_t>(root) >= num_vertices)
    throw InvalidArgument("root " + std::to_string(root) + " is not a vertex");
  auto check_side = [&](std::size_t size, const char* name) {
    if (size != 0 && size != num_vertices)
      throw InvalidArgument(std::string(name) + " table size does not match vertex count");
  };
  check_side(levels_.size(), "level");
  check_side(labels_.size(), "label");
  check_side(frontier_.size(), "frontier");

  offsets_.assign(num_vertices + 1, 0);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= num_vertices ||
        static_cast<std::size_t>(e.v) >= num_vertices)
      throw InvalidArgument("edge endpoint out of range");
    if (e.u == e.v) throw InvalidArgument("self-loops are not supported");
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (std::size_t i = 1; i <= num_vertices; ++i) offsets_[i] += offsets_[i - 1];
  adjacency_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<std::int64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges) {
    adjacency_[cursor[e.u]++] = e.v;
    adjacency_[cursor[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < num_vertices; ++v)
    std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);

  // Connectivity: report the first vertex set not reached from the root.
  auto dist = bfs_distances(*this, root_);
  auto stray = std::find(dist.begin(), dist.end(), kUnreachable);
  if (stray != dist.end()) {
    auto comp = bfs_distances(*this, static_cast<Vertex>(stray - dist.begin()));
    std::ostringstream msg;
    msg << "graph is disconnected; component not containing the root:";
    int shown = 0;
    for (std::size_t v = 0; v < comp.size() && shown < 16; ++v) {
      if (comp[v] != kUnreachable) {
        msg << ' ' << label(static_cast<Vertex>(v));
        ++shown;
      }
    }
    if (shown == 16) msg << " ...";
    throw InvalidArgument(msg.str());
  }
}

std::optional<Vertex> Graph::find_label(std::int64_t lab) const {
  if (labels_.empty()) {
    if (lab >= 0 && static_cast<std::size_t>(lab) < num_vertices())
      return static_cast<Vertex>(lab);
    return std::nullopt;
  }
  auto it = std::find(labels_.begin(), labels_.end(), lab);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<Vertex>(it - labels_.begin());
}

int Graph::truncation_margin(Vertex x) const {
  if (frontier_.empty()) return kNoFrontier;
  if (frontier_[x]) return 0;
  std::vector<int> dist(num_vertices(), kUnreachable);
  std::deque<Vertex> queue{x};
  dist[x] = 0;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    for (Vertex w : neighbors(v)) {
      if (dist[w] != kUnreachable) continue;
      dist[w] = dist[v] + 1;
      if (frontier_[w]) return dist[w];
      queue.push_back(w);
    }
  }
  return kNoFrontier;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (Vertex v = 0; static_cast<std::size_t>(v) < num_vertices(); ++v)
    for (Vertex w : neighbors(v))
      if (v < w) out.push_back({v, w});
  return out;
}

Graph build_graph(std::span<const std::pair<std::int64_t, std::int64_t>> edges,
                  std::int64_t root_label) {
  if (edges.empty()) throw InvalidArgument("edge list is empty");
  std::vector<std::int64_t> labels;
  labels.reserve(2 * edges.size());
  for (auto [a, b] : edges) {
    labels.push_back(a);
    labels.push_back(b);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  auto index_of = [&](std::int64_t lab) {
    return static_cast<Vertex>(std::lower_bound(labels.begin(), labels.end(), lab) -
                               labels.begin());
  };
  if (!std::binary_search(labels.begin(), labels.end(), root_label))
    throw InvalidArgument("root " + std::to_string(root_label) + " does not occur in the edge list");
  std::vector<Edge> dense;
  dense.reserve(edges.size());
  for (auto [a, b] : edges) dense.push_back({index_of(a), index_of(b)});
  const std::size_t n = labels.size();
  const Vertex root = index_of(root_label);
  return Graph(n, dense, root, {}, std::move(labels));
}

std::vector<int> bfs_distances(const Graph& g, Vertex x, int max_radius) {
  std::vector<int> dist(g.num_vertices(), kUnreachable);
  std::vector<Vertex> frontier{x};
  std::vector<Vertex> next;
  dist[x] = 0;
  for (int d = 0; !frontier.empty() && d < max_radius; ++d) {
    next.clear();
    for (Vertex v : frontier)
      for (Vertex w : g.neighbors(v))
        if (dist[w] == kUnreachable) {
          dist[w] = d + 1;
          next.push_back(w);
        }
    frontier.swap(next);
  }
  return dist;
}

int distance(const Graph& g, Vertex x, Vertex y) {
  if (!g.contains(x) || !g.contains(y)) throw InvalidArgument("vertex out of range");
  if (x == y) return 0;
  // Plain BFS with early exit.
  std::vector<int> dist(g.num_vertices(), kUnreachable);
  std::deque<Vertex> queue{x};
  dist[x] = 0;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    for (Vertex w : g.neighbors(v)) {
      if (dist[w] != kUnreachable) continue;
      dist[w] = dist[v] + 1;
      if (w == y) return dist[w];
      queue.push_back(w);
    }
  }
  return kUnreachable;  // unreachable: Graph guarantees connectivity
}

Ball ball(const Graph& g, Vertex x, int r) {
  if (r < 1) throw InvalidArgument("ball radius must be >= 1");
  if (!g.contains(x)) throw InvalidArgument("ball center out of range");
  auto dist = bfs_distances(g, x, r - 1);
  Ball b{x, r, {}, 0};
  for (Vertex v = 0; static_cast<std::size_t>(v) < dist.size(); ++v) {
    if (dist[v] != kUnreachable && dist[v] < r) {
      b.members.push_back(v);
      b.volume += g.degree(v);
    }
  }
  return b;
}

Graph build_path(int n) {
  if (n < 2) throw InvalidArgument("path needs at least 2 vertices");
  std::vector<Edge> edges;
  for (Vertex i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph(static_cast<std::size_t>(n), edges, 0);
}

Graph build_cycle(int n) {
  if (n < 3) throw InvalidArgument("cycle needs at least 3 vertices");
  std::vector<Edge> edges;
  for (Vertex i = 0; i < n; ++i) edges.push_back({i, static_cast<Vertex>((i + 1) % n)});
  return Graph(static_cast<std::size_t>(n), edges, 0);
}

Graph build_line(int half_width) {
  if (half_width < 1) throw InvalidArgument("line half-width must be >= 1");
  const int n = 2 * half_width + 1;
  std::vector<Edge> edges;
  std::vector<std::int64_t> labels(n);
  std::vector<std::uint8_t> frontier(n, 0);
  for (Vertex i = 0; i < n; ++i) labels[i] = i - half_width;
  for (Vertex i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  frontier.front() = frontier.back() = 1;
  return Graph(n, edges, half_width, {}, std::move(labels), std::move(frontier));
}

std::int64_t comb_label(int n, int m, int r_max) {
  return static_cast<std::int64_t>(m) * (2 * r_max + 1) + (n + r_max);
}

std::pair<int, int> comb_coordinates(std::int64_t label, int r_max) {
  const std::int64_t width = 2 * r_max + 1;
  return {static_cast<int>(label % width) - r_max, static_cast<int>(label / width)};
}

Graph build_comb(int r_max) {
  if (r_max < 1) throw InvalidArgument("comb range must be >= 1");
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (int n = -r_max; n < r_max; ++n)
    edges.emplace_back(comb_label(n, 0, r_max), comb_label(n + 1, 0, r_max));
  for (int n = 1; n <= r_max; ++n)
    for (int m = 0; m < n; ++m)
      edges.emplace_back(comb_label(n, m, r_max), comb_label(n, m + 1, r_max));
  Graph dense = build_graph(edges, comb_label(0, 0, r_max));
  std::vector<std::uint8_t> frontier(dense.num_vertices(), 0);
  frontier[*dense.find_label(comb_label(-r_max, 0, r_max))] = 1;
  frontier[*dense.find_label(comb_label(r_max, 0, r_max))] = 1;
  std::vector<std::int64_t> labels(dense.num_vertices());
  for (Vertex v = 0; static_cast<std::size_t>(v) < labels.size(); ++v) labels[v] = dense.label(v);
  auto edge_list = dense.edges();
  return Graph(dense.num_vertices(), edge_list, dense.root(), {}, std::move(labels),
               std::move(frontier));
}

void write_edge_list(std::ostream& os, const Graph& g) {
  os << "# root " << g.label(g.root()) << '\n';
  if (g.has_levels())
    for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v)
      os << "# level " << g.label(v) << ' ' << g.level(v) << '\n';
  if (g.has_frontier())
    for (Vertex v = 0; static_cast<std::size_t>(v) < g.num_vertices(); ++v)
      if (g.is_frontier(v)) os << "# frontier " << g.label(v) << '\n';
  for (const Edge& e : g.edges()) os << g.label(e.u) << ' ' << g.label(e.v) << '\n';
}

Graph read_edge_list(std::istream& is) {
  std::optional<std::int64_t> root;
  std::map<std::int64_t, int> levels;
  std::vector<std::int64_t> frontier;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream in(line);
    if (line[0] == '#') {
      std::string hash, key;
      in >> hash >> key;
      std::int64_t lab = 0;
      if (key == "root" && in >> lab) {
        root = lab;
      } else if (key == "level") {
        int lvl = 0;
        if (!(in >> lab >> lvl)) throw InvalidArgument("malformed level line " + std::to_string(lineno));
        levels[lab] = lvl;
      } else if (key == "frontier" && in >> lab) {
        frontier.push_back(lab);
      }
      continue;  // other comments are ignored
    }
    std::int64_t a = 0, b = 0;
    if (!(in >> a >> b)) throw InvalidArgument("malformed edge line " + std::to_string(lineno));
    edges.emplace_back(a, b);
  }
  if (!root) throw InvalidArgument("edge list has no '# root' header");
  if (edges.empty()) {
    // A lone root is a valid (trivial) cluster.
    std::vector<int> lv;
    if (!levels.empty()) lv.push_back(levels.count(*root) ? levels[*root] : 0);
    std::vector<std::uint8_t> fr;
    if (!frontier.empty()) fr.push_back(1);
    return Graph(1, {}, 0, std::move(lv), {*root}, std::move(fr));
  }
  Graph base = build_graph(edges, *root);
  const std::size_t n = base.num_vertices();
  std::vector<std::int64_t> labels(n);
  for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v) labels[v] = base.label(v);
  std::vector<int> lv;
  if (!levels.empty()) {
    lv.resize(n);
    for (Vertex v = 0; static_cast<std::size_t>(v) < n; ++v) {
      auto it = levels.find(labels[v]);
      if (it == levels.end())
        throw InvalidArgument("missing level for vertex " + std::to_string(labels[v]));
      lv[v] = it->second;
    }
  }
  std::vector<std::uint8_t> fr;
  if (!frontier.empty()) {
    fr.assign(n, 0);
    for (auto lab : frontier) {
      auto v = base.find_label(lab);
      if (!v) throw InvalidArgument("frontier vertex " + std::to_string(lab) + " has no edges");
      fr[*v] = 1;
    }
  }
  auto edge_list = base.edges();
  return Graph(n, edge_list, base.root(), std::move(lv), std::move(labels), std::move(fr));
}

}  // namespace critwalk
