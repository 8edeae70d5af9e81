#include "poisonprobe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "poisonprobe/errors.hpp"

namespace poisonprobe {

CsrAdjacency CsrAdjacency::from_edges(std::size_t n,
                                      std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::vector<NodeId>> rows(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) {
      throw InvalidArgument("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") out of range for " + std::to_string(n) + " nodes");
    }
    if (a == b) continue;
    rows[a].push_back(b);
    rows[b].push_back(a);
  }
  CsrAdjacency csr;
  csr.offsets_.reserve(n + 1);
  csr.offsets_.push_back(0);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    csr.columns_.insert(csr.columns_.end(), r.begin(), r.end());
    csr.offsets_.push_back(csr.columns_.size());
  }
  return csr;
}

bool CsrAdjacency::has_edge(NodeId i, NodeId j) const {
  const auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

AttributedGraph::AttributedGraph(Matrix features, CsrAdjacency adjacency,
                                 std::vector<ClassId> labels, int class_count,
                                 std::vector<std::string> class_names)
    : features_(std::move(features)),
      adjacency_(std::move(adjacency)),
      labels_(std::move(labels)),
      class_count_(class_count),
      class_names_(std::move(class_names)) {
  const std::size_t n = features_.rows();
  if (adjacency_.node_count() != n) {
    throw InvalidArgument("adjacency has " + std::to_string(adjacency_.node_count()) +
                          " nodes but feature matrix has " + std::to_string(n) + " rows");
  }
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : adjacency_.neighbors(i)) {
      if (j == i) throw InvalidArgument("self-loop stored at node " + std::to_string(i));
      if (!adjacency_.has_edge(j, i)) {
        throw InvalidArgument("adjacency not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
  }
  for (double x : features_.values()) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("feature entry outside [0, 1]");
  }
  if (!labels_.empty()) {
    if (labels_.size() != n) throw InvalidArgument("label vector length differs from node count");
    for (ClassId c : labels_) {
      if (c < 0 || c >= class_count_) {
        throw InvalidArgument("label " + std::to_string(c) + " outside [0, " +
                              std::to_string(class_count_) + ")");
      }
    }
  }
  if (!class_names_.empty() && class_names_.size() != static_cast<std::size_t>(class_count_)) {
    throw InvalidArgument("class name count differs from class count");
  }
}

double NormalizedAdjacency::at(NodeId i, NodeId j) const {
  const auto first = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
  const auto last = columns.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - columns.begin())];
}

NormalizedAdjacency normalize(const AttributedGraph& graph) { return normalize(graph.adjacency()); }

NormalizedAdjacency normalize(const CsrAdjacency& adjacency) {
  const std::size_t n = adjacency.node_count();
  NormalizedAdjacency out;
  out.degree.resize(n);
  for (NodeId i = 0; i < n; ++i) out.degree[i] = static_cast<double>(adjacency.degree(i) + 1);

  out.offsets.reserve(n + 1);
  out.offsets.push_back(0);
  out.columns.reserve(adjacency.entry_count() + n);
  out.values.reserve(adjacency.entry_count() + n);
  for (NodeId i = 0; i < n; ++i) {
    bool diagonal_done = false;
    auto emit = [&](NodeId j) {
      out.columns.push_back(j);
      // the product D_i * D_j commutes exactly, so Â_ij == Â_ji bitwise
      out.values.push_back(1.0 / std::sqrt(out.degree[i] * out.degree[j]));
    };
    for (NodeId j : adjacency.neighbors(i)) {
      if (!diagonal_done && j > i) {
        emit(i);
        diagonal_done = true;
      }
      emit(j);
    }
    if (!diagonal_done) emit(i);
    out.offsets.push_back(out.columns.size());
  }
  return out;
}

Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (NodeId i = 0; i < adj.node_count(); ++i) {
    auto dst = out.row(i);
    for (std::size_t e = adj.row_begin(i); e < adj.row_end(i); ++e) {
      axpy(adj.values[e], m.row(adj.columns[e]), dst);
    }
  }
  return out;
}

std::vector<int> bfs_distances(const CsrAdjacency& adjacency, std::span<const NodeId> sources,
                               int max_depth) {
  std::vector<int> dist(adjacency.node_count(), kUnreached);
  std::deque<NodeId> queue;
  for (NodeId s : sources) {
    if (dist[s] == kUnreached) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    if (max_depth >= 0 && dist[v] >= max_depth) continue;
    for (NodeId w : adjacency.neighbors(v)) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

std::vector<NodeId> hop_neighbors(const AttributedGraph& graph, NodeId u, int m) {
  if (u >= graph.node_count()) throw InvalidArgument("node " + std::to_string(u) + " out of range");
  if (m < 1) throw InvalidArgument("hop count must be positive");
  return build_neighborhood_tree(graph, u, m).level(m);
}

const std::vector<NodeId>& NeighborhoodTree::level(int m) const {
  static const std::vector<NodeId> kEmpty;
  if (m < 0 || m >= static_cast<int>(levels.size())) return kEmpty;
  return levels[static_cast<std::size_t>(m)];
}

NeighborhoodTree build_neighborhood_tree(const AttributedGraph& graph, NodeId u, int depth) {
  return build_neighborhood_tree(graph.adjacency(), u, depth);
}

NeighborhoodTree build_neighborhood_tree(const CsrAdjacency& adjacency, NodeId u, int depth) {
  if (u >= adjacency.node_count()) {
    throw InvalidArgument("node " + std::to_string(u) + " out of range");
  }
  if (depth < 0) throw InvalidArgument("tree depth must be non-negative");
  NeighborhoodTree tree;
  tree.root = u;
  tree.depth = depth;
  const NodeId sources[] = {u};
  tree.distance = bfs_distances(adjacency, sources, depth);
  tree.parents.resize(adjacency.node_count());
  tree.levels.resize(static_cast<std::size_t>(depth) + 1);
  for (NodeId v = 0; v < adjacency.node_count(); ++v) {
    const int dv = tree.distance[v];
    if (dv == kUnreached) continue;
    tree.levels[static_cast<std::size_t>(dv)].push_back(v);
    if (dv == 0) continue;
    for (NodeId p : adjacency.neighbors(v)) {
      if (tree.distance[p] == dv - 1) tree.parents[v].push_back(p);
    }
  }
  return tree;
}

}  // namespace poisonprobe
