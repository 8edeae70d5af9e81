#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poisonprobe/matrix.hpp"

namespace poisonprobe {

using NodeId = std::size_t;
using ClassId = int;

/// Compressed sparse row adjacency. Column indices are sorted per row.
class CsrAdjacency {
 public:
  CsrAdjacency() = default;

  /// Builds a symmetric, loop-free adjacency from an undirected edge list.
  /// Self-loops and duplicate pairs are dropped.
  static CsrAdjacency from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  [[nodiscard]] std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  /// Number of stored (directed) entries; twice the undirected edge count.
  [[nodiscard]] std::size_t entry_count() const { return columns_.size(); }

  [[nodiscard]] std::span<const NodeId> neighbors(NodeId i) const {
    return {columns_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  [[nodiscard]] std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  [[nodiscard]] bool has_edge(NodeId i, NodeId j) const;

  [[nodiscard]] const std::vector<std::size_t>& offsets() const { return offsets_; }
  [[nodiscard]] const std::vector<NodeId>& columns() const { return columns_; }

  friend bool operator==(const CsrAdjacency&, const CsrAdjacency&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> columns_;
};

/// An attributed graph G = (X, A) with optional node labels.
///
/// Features live in [0, 1]. The adjacency is symmetric with an empty diagonal;
/// self-loops only appear inside the normalized adjacency.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  /// Validates every invariant and throws InvalidArgument on violation.
  AttributedGraph(Matrix features, CsrAdjacency adjacency, std::vector<ClassId> labels,
                  int class_count, std::vector<std::string> class_names = {});

  [[nodiscard]] std::size_t node_count() const { return features_.rows(); }
  [[nodiscard]] std::size_t feature_dim() const { return features_.cols(); }
  [[nodiscard]] int class_count() const { return class_count_; }
  [[nodiscard]] bool has_labels() const { return !labels_.empty(); }

  [[nodiscard]] const Matrix& features() const { return features_; }
  [[nodiscard]] const CsrAdjacency& adjacency() const { return adjacency_; }
  [[nodiscard]] const std::vector<ClassId>& labels() const { return labels_; }
  [[nodiscard]] const std::vector<std::string>& class_names() const { return class_names_; }

  friend bool operator==(const AttributedGraph&, const AttributedGraph&) = default;

 private:
  Matrix features_;
  CsrAdjacency adjacency_;
  std::vector<ClassId> labels_;
  int class_count_ = 0;
  std::vector<std::string> class_names_;
};

/// Â = D̃^{-1/2} (A + I) D̃^{-1/2}, stored in CSR form with the diagonal included.
struct NormalizedAdjacency {
  std::vector<std::size_t> offsets;
  std::vector<NodeId> columns;
  std::vector<double> values;
  /// D̃_ii = deg(i) + 1.
  std::vector<double> degree;

  [[nodiscard]] std::size_t node_count() const { return degree.size(); }
  [[nodiscard]] std::size_t row_begin(NodeId i) const { return offsets[i]; }
  [[nodiscard]] std::size_t row_end(NodeId i) const { return offsets[i + 1]; }
  /// Returns Â_ij, or 0 when the entry is structurally absent.
  [[nodiscard]] double at(NodeId i, NodeId j) const;
};

NormalizedAdjacency normalize(const AttributedGraph& graph);
NormalizedAdjacency normalize(const CsrAdjacency& adjacency);

/// out = Â * m
Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m);

inline constexpr int kUnreached = -1;

/// Multi-source BFS hop distances, truncated at `max_depth` (negative means
/// unbounded). Nodes not reached get kUnreached.
std::vector<int> bfs_distances(const CsrAdjacency& adjacency, std::span<const NodeId> sources,
                               int max_depth = -1);

/// Nodes at BFS distance exactly m from u, sorted ascending.
std::vector<NodeId> hop_neighbors(const AttributedGraph& graph, NodeId u, int m);

/// BFS shortest-path DAG rooted at a target node. Edges between nodes at the
/// same distance are ignored, so every non-root node's parents sit exactly
/// one level closer to the root.
struct NeighborhoodTree {
  NodeId root = 0;
  int depth = 0;
  /// Hop distance from root, kUnreached beyond `depth`.
  std::vector<int> distance;
  /// parents[v]: neighbors of v at distance(v) - 1, sorted. Empty for the root.
  std::vector<std::vector<NodeId>> parents;
  /// levels[m]: nodes at distance m (levels[0] = {root}), sorted.
  std::vector<std::vector<NodeId>> levels;

  [[nodiscard]] const std::vector<NodeId>& level(int m) const;
};

NeighborhoodTree build_neighborhood_tree(const AttributedGraph& graph, NodeId u, int depth);
NeighborhoodTree build_neighborhood_tree(const CsrAdjacency& adjacency, NodeId u, int depth);

}  // namespace poisonprobe
