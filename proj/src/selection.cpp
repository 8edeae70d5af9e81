#include "poisonprobe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poisonprobe/errors.hpp"

namespace poisonprobe {

std::optional<double> EfficiencyTable::score(NodeId node) const {
  const auto it = std::lower_bound(candidates.begin(), candidates.end(), node,
                                   [](const Candidate& c, NodeId v) { return c.node < v; });
  if (it == candidates.end() || it->node != node) return std::nullopt;
  return it->score;
}

bool same_score(double a, double b) {
  return std::abs(a - b) <= kScoreTieTolerance * std::max(std::abs(a), std::abs(b));
}

EfficiencyTable poisoning_efficiency(const NeighborhoodTree& tree, const CsrAdjacency& graph, int m) {
  if (m < 1) throw InvalidArgument("hop count must be at least 1");
  if (m > tree.depth) {
    throw InvalidArgument("hop count " + std::to_string(m) + " exceeds the tree depth " +
                          std::to_string(tree.depth));
  }
  if (graph.node_count() != tree.distance.size()) {
    throw InvalidArgument("tree and graph have different node counts");
  }
  EfficiencyTable table;
  table.target = tree.root;
  table.hops = m;
  const auto& first = tree.level(1);
  if (m == 1) {
    for (NodeId v : first) table.candidates.push_back({v, 1.0 / static_cast<double>(first.size())});
    return table;
  }

  std::vector<double> phi(graph.node_count(), 0.0);
  for (NodeId v : first) phi[v] = 1.0;
  for (int level = 2; level <= m; ++level) {
    for (NodeId v : tree.level(level)) {
      double sum = 0.0;
      for (NodeId eta : tree.parents[v]) sum += phi[eta] / static_cast<double>(graph.degree(eta));
      phi[v] = sum;
    }
  }
  for (NodeId v : tree.level(m)) table.candidates.push_back({v, phi[v]});
  return table;
}

EfficiencyTable poisoning_efficiency(const NeighborhoodTree& tree, const AttributedGraph& graph,
                                     int m) {
  return poisoning_efficiency(tree, graph.adjacency(), m);
}

EfficiencyTable poisoning_efficiency(const AttributedGraph& graph, NodeId target, int m) {
  if (m < 1) throw InvalidArgument("hop count must be at least 1");
  return poisoning_efficiency(build_neighborhood_tree(graph, target, m), graph, m);
}

namespace {

/// Index into `pool` of the extreme score, random among ties.
std::size_t pick_extreme(const std::vector<Candidate>& pool, bool largest, Rng& rng) {
  if (pool.empty()) throw NoCandidateError("no poison candidates at this hop distance");
  double best = pool.front().score;
  for (const auto& c : pool) {
    if (largest ? c.score > best : c.score < best) best = c.score;
  }
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (same_score(pool[i].score, best)) ties.push_back(i);
  }
  if (ties.size() == 1) return ties.front();
  return ties[uniform_index(rng, ties.size())];
}

}  // namespace

NodeId select_poison_node(const EfficiencyTable& table, Rng& rng) {
  return table.candidates[pick_extreme(table.candidates, true, rng)].node;
}

NodeId select_bottom_node(const EfficiencyTable& table, Rng& rng) {
  return table.candidates[pick_extreme(table.candidates, false, rng)].node;
}

std::vector<NodeId> select_top_k(const EfficiencyTable& table, int k, Rng& rng) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  std::vector<Candidate> pool = table.candidates;
  std::vector<NodeId> chosen;
  while (!pool.empty() && chosen.size() < static_cast<std::size_t>(k)) {
    const std::size_t i = pick_extreme(pool, true, rng);
    chosen.push_back(pool[i].node);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return chosen;
}

std::vector<Candidate> distinct_efficiency_candidates(const EfficiencyTable& table, Rng& rng) {
  std::vector<Candidate> sorted = table.candidates;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  std::vector<Candidate> out;
  std::size_t start = 0;
  while (start < sorted.size()) {
    std::size_t end = start + 1;
    while (end < sorted.size() && same_score(sorted[start].score, sorted[end].score)) ++end;
    const std::size_t size = end - start;
    out.push_back(sorted[start + (size == 1 ? 0 : uniform_index(rng, size))]);
    start = end;
  }
  return out;
}

}  // namespace poisonprobe
