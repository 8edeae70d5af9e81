#include "poisonprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "poisonprobe/errors.hpp"
#include "poisonprobe/text.hpp"
#include "poisonprobe/weights_io.hpp"

namespace poisonprobe {

DatasetSpec DatasetSpec::resolve(const std::string& name_or_prefix,
                                 const std::filesystem::path& root) {
  DatasetSpec spec;
  std::string lower;
  for (char c : name_or_prefix) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "cora" || lower == "cora-ml" || lower == "cora_ml") {
    spec.name = "cora";
    spec.node_file = root / "cora" / "cora.content";
    spec.edge_file = root / "cora" / "cora.cites";
    spec.expected = DatasetStats{2708, 13264, 1433, 7};
  } else if (lower == "citeseer") {
    spec.name = "citeseer";
    spec.node_file = root / "citeseer" / "citeseer.content";
    spec.edge_file = root / "citeseer" / "citeseer.cites";
    spec.expected = DatasetStats{3312, 12384, 3703, 6};
  } else {
    spec.name = std::filesystem::path(name_or_prefix).filename().string();
    spec.node_file = name_or_prefix + ".content";
    spec.edge_file = name_or_prefix + ".cites";
  }
  return spec;
}

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + std::string(what) + " " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    f(line, line_no);
    pos = end + 1;
  }
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec) {
  const std::string nodes_text = read_file(spec.node_file, "node file");
  const std::string edges_text = read_file(spec.edge_file, "edge file");

  Dataset data;
  data.name = spec.name;
  LoadReport& report = data.report;
  auto error = [](const std::filesystem::path& p, std::size_t line, const std::string& why) {
    return ParseError(p.string() + ":" + std::to_string(line) + ": " + why);
  };

  std::vector<double> values;
  std::vector<ClassId> labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, ClassId> class_ids;
  std::unordered_map<std::string, NodeId> node_index;
  std::size_t dim = 0;

  for_each_line(nodes_text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_whitespace(line);
    if (fields.empty()) return;
    if (fields.size() < 3) throw error(spec.node_file, line_no, "expected id, features and label");
    const std::size_t d = fields.size() - 2;
    if (report.node_records == 0) {
      dim = d;
    } else if (d != dim) {
      throw error(spec.node_file, line_no,
                  "expected " + std::to_string(dim) + " features, found " + std::to_string(d));
    }
    const std::string id(fields.front());
    if (!node_index.emplace(id, report.node_records).second) {
      throw error(spec.node_file, line_no, "duplicate node id '" + id + "'");
    }
    for (std::size_t k = 1; k <= d; ++k) {
      const auto v = parse_double(fields[k]);
      if (!v || !std::isfinite(*v)) {
        throw error(spec.node_file, line_no, "bad feature value '" + std::string(fields[k]) + "'");
      }
      double x = *v;
      if (x != 0.0 && x != 1.0) {
        ++report.non_binary_features;
        x = x >= 0.5 ? 1.0 : 0.0;
      }
      values.push_back(x);
    }
    const std::string label(fields.back());
    auto [it, inserted] = class_ids.emplace(label, static_cast<ClassId>(class_names.size()));
    if (inserted) class_names.push_back(label);
    labels.push_back(it->second);
    data.node_ids.push_back(id);
    ++report.node_records;
  });
  if (report.node_records == 0) throw ParseError(spec.node_file.string() + ": no node records");
  if (report.non_binary_features > 0) {
    report.warnings.push_back(std::to_string(report.non_binary_features) +
                              " non-binary feature values thresholded at 0.5");
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::size_t unknown_listed = 0;
  for_each_line(edges_text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_whitespace(line);
    if (fields.empty()) return;
    if (fields.size() != 2) throw error(spec.edge_file, line_no, "expected two node ids");
    ++report.edge_lines;
    const auto a = node_index.find(std::string(fields[0]));
    const auto b = node_index.find(std::string(fields[1]));
    if (a == node_index.end() || b == node_index.end()) {
      ++report.unknown_id_edges;
      if (unknown_listed++ < 5) {
        report.warnings.push_back(spec.edge_file.string() + ":" + std::to_string(line_no) +
                                  ": unknown node id, edge skipped");
      }
      return;
    }
    if (a->second == b->second) {
      ++report.self_loops;
      return;
    }
    const auto key = std::minmax(a->second, b->second);
    if (!seen.insert(key).second) {
      ++report.duplicate_edges;
      return;
    }
    edges.emplace_back(key.first, key.second);
  });
  if (report.unknown_id_edges > 5) {
    report.warnings.push_back(std::to_string(report.unknown_id_edges) +
                              " edges with unknown node ids skipped in total");
  }

  const std::size_t n = report.node_records;
  report.feature_dim = dim;
  report.classes = static_cast<int>(class_names.size());
  report.undirected_edges = edges.size();
  report.mirrored_pairs = 2 * edges.size();
  report.mirrored_with_self_loops = report.mirrored_pairs + n;

  Matrix features(n, dim);
  std::copy(values.begin(), values.end(), features.values().begin());
  data.graph = AttributedGraph(std::move(features), CsrAdjacency::from_edges(n, edges),
                               std::move(labels), report.classes, std::move(class_names));
  data.hash = hash_bytes(nodes_text + '\0' + edges_text);

  if (spec.expected) {
    for (const auto& issue : validate_stats(report, *spec.expected)) {
      report.warnings.push_back(issue.message);
    }
  }
  return data;
}

std::vector<ValidationIssue> validate_stats(const LoadReport& report, const DatasetStats& expected) {
  std::vector<ValidationIssue> issues;
  auto exact = [&](const char* what, std::size_t got, std::size_t want) {
    if (got != want) {
      issues.push_back({true, std::string(what) + ": expected " + std::to_string(want) +
                                  ", found " + std::to_string(got)});
    }
  };
  exact("nodes", report.node_records, expected.nodes);
  exact("features", report.feature_dim, expected.features);
  exact("classes", static_cast<std::size_t>(report.classes), static_cast<std::size_t>(expected.classes));
  const std::size_t got = report.mirrored_with_self_loops;
  if (got != expected.edges) {
    const double rel = std::abs(static_cast<double>(got) - static_cast<double>(expected.edges)) /
                       static_cast<double>(expected.edges);
    issues.push_back({rel >= 0.02, "edges (mirrored pairs plus self-loops): expected " +
                                       std::to_string(expected.edges) + ", found " +
                                       std::to_string(got) + " (undirected " +
                                       std::to_string(report.undirected_edges) + ", mirrored " +
                                       std::to_string(report.mirrored_pairs) + ")"});
  }
  return issues;
}

void save_dataset(const AttributedGraph& graph, const std::filesystem::path& node_file,
                  const std::filesystem::path& edge_file) {
  std::ofstream nodes(node_file, std::ios::binary);
  if (!nodes) throw ConfigError("cannot write " + node_file.string());
  const Matrix& x = graph.features();
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    nodes << i;
    for (double v : x.row(i)) nodes << '\t' << format_double(v);
    const ClassId c = graph.has_labels() ? graph.labels()[i] : 0;
    const auto& names = graph.class_names();
    nodes << '\t'
          << (static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                         : "class" + std::to_string(c))
          << '\n';
  }
  std::ofstream edges(edge_file, std::ios::binary);
  if (!edges) throw ConfigError("cannot write " + edge_file.string());
  const auto& adj = graph.adjacency();
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    for (NodeId j : adj.neighbors(i)) {
      if (i < j) edges << i << '\t' << j << '\n';
    }
  }
  if (!nodes || !edges) throw ConfigError("write failed for dataset files");
}

}  // namespace poisonprobe
