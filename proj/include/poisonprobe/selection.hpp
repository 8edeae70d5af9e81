#pragma once

#include <optional>
#include <vector>

#include "poisonprobe/graph.hpp"
#include "poisonprobe/random.hpp"

namespace poisonprobe {

struct Candidate {
  NodeId node = 0;
  double score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Poisoning efficiency of every node exactly `hops` away from the target.
struct EfficiencyTable {
  NodeId target = 0;
  int hops = 0;
  /// Sorted by node id.
  std::vector<Candidate> candidates;

  [[nodiscard]] bool empty() const { return candidates.empty(); }
  [[nodiscard]] std::optional<double> score(NodeId node) const;
};

/// Relative tolerance under which two efficiency scores count as equal.
inline constexpr double kScoreTieTolerance = 1e-12;
bool same_score(double a, double b);

/// phi^(1) = 1 / |N_u^(1)| for the 1-hop candidates. For m > 1 the recursion
/// phi^(m)(v) = sum over parents eta of phi^(m-1)(eta) / |N_eta^(1)| starts
/// from phi^(1) = 1 on the first level. Degrees are taken in `graph`.
/// Throws InvalidArgument when m < 1 or m exceeds the tree depth.
EfficiencyTable poisoning_efficiency(const NeighborhoodTree& tree, const CsrAdjacency& graph, int m);
EfficiencyTable poisoning_efficiency(const NeighborhoodTree& tree, const AttributedGraph& graph, int m);
/// Builds the tree too.
EfficiencyTable poisoning_efficiency(const AttributedGraph& graph, NodeId target, int m);

/// Highest-score candidate; exact ties are broken uniformly at random. No
/// random draw is made when the maximum is unique. Throws NoCandidateError on
/// an empty table.
NodeId select_poison_node(const EfficiencyTable& table, Rng& rng);

/// Lowest-score candidate, ties broken like select_poison_node.
NodeId select_bottom_node(const EfficiencyTable& table, Rng& rng);

/// Greedy repeated argmax without replacement; min(k, |candidates|) nodes in
/// descending efficiency. Throws InvalidArgument when k < 1.
std::vector<NodeId> select_top_k(const EfficiencyTable& table, int k, Rng& rng);

/// One randomly chosen representative per distinct score, ordered by
/// descending score.
std::vector<Candidate> distinct_efficiency_candidates(const EfficiencyTable& table, Rng& rng);

}  // namespace poisonprobe
