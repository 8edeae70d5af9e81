#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "poisonprobe/gcn.hpp"

namespace poisonprobe {

/// Current weight container version. See README.md ("Weight file format").
inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// A model plus the metadata needed to use it against the right dataset.
struct WeightFile {
  GcnModel model;
  /// Class-id -> label string, so CLI class arguments stay stable across runs.
  std::vector<std::string> class_names;
  std::string dataset;
  std::string dataset_hash;

  friend bool operator==(const WeightFile&, const WeightFile&) = default;
};

void save_weights(const WeightFile& file, const std::filesystem::path& path);
WeightFile load_weights(const std::filesystem::path& path);

/// FNV-1a 64 over the bytes of a file, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);
std::string hash_bytes(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace poisonprobe
