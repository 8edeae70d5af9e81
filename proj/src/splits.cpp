#include "poisonprobe/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "poisonprobe/errors.hpp"
#include "poisonprobe/random.hpp"
#include "poisonprobe/text.hpp"

namespace poisonprobe {

Split make_splits(std::size_t node_count, double labeled_fraction, std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0)) {
    throw ConfigError("labeled fraction must lie in (0, 1), got " + format_double(labeled_fraction));
  }
  std::vector<NodeId> order(node_count);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  // explicit Fisher-Yates so the permutation does not depend on the
  // standard library's shuffle implementation
  for (std::size_t i = node_count; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(order[i - 1], order[j]);
  }
  const auto labeled =
      static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(node_count)));
  const std::size_t train_count = labeled / 2;

  Split split;
  split.node_count = node_count;
  split.seed = seed;
  split.labeled_fraction = labeled_fraction;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count),
                          order.begin() + static_cast<std::ptrdiff_t>(labeled));
  split.unlabeled.assign(order.begin() + static_cast<std::ptrdiff_t>(labeled), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.unlabeled.begin(), split.unlabeled.end());
  return split;
}

namespace {

void write_ids(std::ostream& out, const char* key, const std::vector<NodeId>& ids) {
  out << key;
  for (NodeId id : ids) out << ' ' << id;
  out << '\n';
}

}  // namespace

void save_split(const Split& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write split file " + path.string());
  out << "# poisonprobe split v1\n";
  out << "nodes " << split.node_count << '\n';
  out << "seed " << split.seed << '\n';
  out << "labeled_fraction " << format_double(split.labeled_fraction) << '\n';
  write_ids(out, "train", split.train);
  write_ids(out, "validation", split.validation);
  write_ids(out, "unlabeled", split.unlabeled);
}

Split load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open split file " + path.string());
  Split split;
  std::string line;
  std::size_t line_no = 0;
  bool seen_nodes = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    auto fail = [&](const std::string& why) {
      return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (key == "nodes") {
      if (!(fields >> split.node_count)) throw fail("bad node count");
      seen_nodes = true;
    } else if (key == "seed") {
      if (!(fields >> split.seed)) throw fail("bad seed");
    } else if (key == "labeled_fraction") {
      std::string v;
      fields >> v;
      split.labeled_fraction = parse_double(v).value_or(-1.0);
      if (split.labeled_fraction <= 0.0) throw fail("bad labeled fraction");
    } else if (key == "train" || key == "validation" || key == "unlabeled") {
      auto& ids = key == "train" ? split.train
                  : key == "validation" ? split.validation
                                        : split.unlabeled;
      NodeId id = 0;
      while (fields >> id) ids.push_back(id);
      if (!fields.eof()) throw fail("bad node id");
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  if (!seen_nodes) throw ParseError(path.string() + ": missing 'nodes' line");
  for (const auto* part : {&split.train, &split.validation, &split.unlabeled}) {
    for (NodeId id : *part) {
      if (id >= split.node_count) throw ParseError(path.string() + ": node id out of range");
    }
  }
  return split;
}

}  // namespace poisonprobe
