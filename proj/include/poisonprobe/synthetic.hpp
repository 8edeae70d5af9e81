#pragma once

#include <cstdint>

#include "poisonprobe/graph.hpp"

namespace poisonprobe {

/// Planted-partition graph with sparse binary bag-of-words features, shaped
/// loosely like a citation network. Used where the real datasets are not
/// available.
struct SyntheticSpec {
  std::size_t nodes = 300;
  int classes = 4;
  std::size_t feature_dim = 120;
  /// Mean node degree before deduplication.
  double mean_degree = 4.0;
  /// Probability that an edge stays inside a class.
  double homophily = 0.8;
  /// Active features per node.
  std::size_t words_per_node = 10;
  /// Probability that an active feature comes from the node's class block.
  double topic_strength = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Labels are balanced round-robin; class names are "c0", "c1", ...
AttributedGraph generate_synthetic(const SyntheticSpec& spec);

}  // namespace poisonprobe
