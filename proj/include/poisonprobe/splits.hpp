#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "poisonprobe/graph.hpp"

namespace poisonprobe {

/// Labeled/unlabeled partition. The labeled part is halved into train and
/// validation; everything else is the unlabeled (test) set.
struct Split {
  std::size_t node_count = 0;
  std::uint64_t seed = 0;
  double labeled_fraction = 0.2;
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> unlabeled;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Seeded uniform sampling without replacement. round(fraction * n) nodes are
/// labeled; floor(labeled / 2) of them go to train, the rest to validation.
/// Throws ConfigError when fraction is outside (0, 1).
Split make_splits(std::size_t node_count, double labeled_fraction, std::uint64_t seed);

void save_split(const Split& split, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path);

}  // namespace poisonprobe
