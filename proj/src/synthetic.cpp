#include "poisonprobe/synthetic.hpp"

#include <cmath>
#include <string>

#include "poisonprobe/errors.hpp"
#include "poisonprobe/random.hpp"

namespace poisonprobe {

void SyntheticSpec::validate() const {
  if (nodes < 2) throw ConfigError("synthetic graph needs at least two nodes");
  if (classes < 2 || static_cast<std::size_t>(classes) > nodes) {
    throw ConfigError("synthetic class count must lie in [2, nodes]");
  }
  if (feature_dim < static_cast<std::size_t>(classes)) {
    throw ConfigError("need at least one feature per class");
  }
  if (!(mean_degree >= 0.0) || !std::isfinite(mean_degree)) throw ConfigError("mean degree must be non-negative");
  if (!(homophily >= 0.0 && homophily <= 1.0)) throw ConfigError("homophily must lie in [0, 1]");
  if (!(topic_strength >= 0.0 && topic_strength <= 1.0)) {
    throw ConfigError("topic strength must lie in [0, 1]");
  }
  if (words_per_node == 0 || words_per_node > feature_dim) {
    throw ConfigError("words per node must lie in [1, feature_dim]");
  }
}

AttributedGraph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.nodes;
  const auto c = static_cast<std::size_t>(spec.classes);

  std::vector<ClassId> labels(n);
  std::vector<std::vector<NodeId>> members(c);
  for (NodeId i = 0; i < n; ++i) {
    labels[i] = static_cast<ClassId>(i % c);
    members[i % c].push_back(i);
  }

  const std::size_t block = spec.feature_dim / c;
  Matrix features(n, spec.feature_dim);
  for (NodeId i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    std::size_t placed = 0;
    while (placed < spec.words_per_node) {
      const std::size_t k = uniform_unit(rng) < spec.topic_strength
                                ? own * block + uniform_index(rng, block)
                                : uniform_index(rng, spec.feature_dim);
      if (features(i, k) == 0.0) {
        features(i, k) = 1.0;
        ++placed;
      }
    }
  }

  const auto edge_count = static_cast<std::size_t>(std::llround(spec.mean_degree * static_cast<double>(n) / 2.0));
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(edge_count);
  for (std::size_t e = 0; e < edge_count; ++e) {
    const NodeId a = uniform_index(rng, n);
    NodeId b;
    if (uniform_unit(rng) < spec.homophily) {
      const auto& same = members[static_cast<std::size_t>(labels[a])];
      b = same[uniform_index(rng, same.size())];
    } else {
      b = uniform_index(rng, n);
    }
    edges.emplace_back(a, b);
  }

  std::vector<std::string> names;
  for (std::size_t k = 0; k < c; ++k) names.push_back("c" + std::to_string(k));
  return AttributedGraph(std::move(features), CsrAdjacency::from_edges(n, edges), std::move(labels),
                         spec.classes, std::move(names));
}

}  // namespace poisonprobe
