#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "poisonprobe/graph.hpp"

namespace poisonprobe {

struct DatasetStats {
  std::size_t nodes = 0;
  /// Entries of A + I: mirrored edge pairs plus one self-loop per node.
  std::size_t edges = 0;
  std::size_t features = 0;
  int classes = 0;
};

/// Where a Planetoid-style dataset lives and what it should contain.
///
/// Node records: `id <tab> f_1 ... f_d <tab> label`, one per line.
/// Edges: `cited <tab> citing`, one per line. Any run of spaces or tabs
/// separates fields.
struct DatasetSpec {
  std::string name;
  std::filesystem::path node_file;
  std::filesystem::path edge_file;
  std::optional<DatasetStats> expected;

  /// `cora` / `cora-ml` and `citeseer` under `root`, laid out as
  /// root/cora/cora.{content,cites} and root/citeseer/citeseer.{content,cites},
  /// with their known statistics. Anything else is taken as a path prefix:
  /// `prefix.content` and `prefix.cites`, relative to the working directory.
  static DatasetSpec resolve(const std::string& name_or_prefix, const std::filesystem::path& root);
};

/// Environment variable naming the dataset root directory.
inline constexpr const char* kDataRootVariable = "POISONPROBE_DATA";

struct LoadReport {
  std::size_t node_records = 0;
  std::size_t feature_dim = 0;
  int classes = 0;
  std::size_t edge_lines = 0;
  std::size_t self_loops = 0;
  /// Lines repeating an undirected pair already seen (in either direction).
  std::size_t duplicate_edges = 0;
  std::size_t unknown_id_edges = 0;
  std::size_t undirected_edges = 0;
  /// 2 * undirected_edges.
  std::size_t mirrored_pairs = 0;
  /// mirrored_pairs + node_records, the nnz of A + I.
  std::size_t mirrored_with_self_loops = 0;
  std::size_t non_binary_features = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const LoadReport&, const LoadReport&) = default;
};

struct Dataset {
  std::string name;
  AttributedGraph graph;
  /// Original record ids, indexed by dense node id.
  std::vector<std::string> node_ids;
  LoadReport report;
  /// Hash over both input files.
  std::string hash;
};

/// Throws ParseError (with path and line number) on malformed rows and on
/// missing files. Unknown edge endpoints are skipped and reported.
Dataset load_dataset(const DatasetSpec& spec);

/// Compares the load report against expected statistics. Exact mismatches in
/// node, feature or class counts are errors; the edge count may deviate by
/// less than 2% with a warning. Returns the problems found (empty when clean).
struct ValidationIssue {
  bool fatal = false;
  std::string message;
};
std::vector<ValidationIssue> validate_stats(const LoadReport& report, const DatasetStats& expected);

/// Writes a graph in the same text format load_dataset reads. Node ids are
/// the dense indices; labels use the class names when present.
void save_dataset(const AttributedGraph& graph, const std::filesystem::path& node_file,
                  const std::filesystem::path& edge_file);

}  // namespace poisonprobe
