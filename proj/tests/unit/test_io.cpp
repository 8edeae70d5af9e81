#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "poisonprobe/errors.hpp"
#include "poisonprobe/random.hpp"
#include "poisonprobe/splits.hpp"
#include "poisonprobe/text.hpp"
#include "poisonprobe/weights_io.hpp"
#include "temp_dir.hpp"

using namespace poisonprobe;

TEST(Splits, SmallAndCoraSizes) {
  const auto s = make_splits(10, 0.2, 1);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.unlabeled.size(), 8u);

  const auto cora = make_splits(2708, 0.2, 1);
  const std::size_t labeled = cora.train.size() + cora.validation.size();
  EXPECT_TRUE(labeled == 541 || labeled == 542);
  EXPECT_LE(cora.validation.size() - cora.train.size(), 1u);
  EXPECT_EQ(labeled + cora.unlabeled.size(), 2708u);
}

TEST(Splits, PartitionAndSeeding) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = make_splits(137, 0.2, seed);
    std::set<NodeId> all;
    for (const auto* part : {&s.train, &s.validation, &s.unlabeled}) {
      for (NodeId v : *part) {
        EXPECT_LT(v, 137u);
        EXPECT_TRUE(all.insert(v).second);
      }
    }
    EXPECT_EQ(all.size(), 137u);
    EXPECT_EQ(s, make_splits(137, 0.2, seed));
  }
  EXPECT_NE(make_splits(137, 0.2, 1).train, make_splits(137, 0.2, 2).train);
  EXPECT_THROW(make_splits(10, 0.0, 1), ConfigError);
  EXPECT_THROW(make_splits(10, 1.0, 1), ConfigError);
}

TEST(Splits, RoundTrip) {
  TempDir dir;
  const auto s = make_splits(50, 0.3, 7);
  save_split(s, dir / "s.split");
  EXPECT_EQ(load_split(dir / "s.split"), s);
  EXPECT_THROW(load_split(dir / "missing.split"), ParseError);
  const auto bad = dir.write("bad.split", "nodes 5\nseed 1\ntrain 9\n");
  EXPECT_THROW(load_split(bad), ParseError);
}

TEST(Weights, RoundTripIsExact) {
  TempDir dir;
  WeightFile f;
  f.model = GcnModel::initialize(Architecture::Gcn3, 7, 3, 5);
  f.model.weights[0](0, 0) = 1.0 / 3.0;
  f.model.weights[1](2, 1) = -0.0;
  f.model.weights[2](0, 0) = std::numeric_limits<double>::denorm_min();
  f.class_names = {"alpha", "beta", "gamma"};
  f.dataset = "toy";
  f.dataset_hash = "0123456789abcdef";
  save_weights(f, dir / "w.bin");
  const auto g = load_weights(dir / "w.bin");
  EXPECT_EQ(g, f);
  EXPECT_TRUE(std::signbit(g.model.weights[1](2, 1)));

  save_weights(f, dir / "w2.bin");
  EXPECT_EQ(file_hash(dir / "w.bin"), file_hash(dir / "w2.bin"));
}

TEST(Weights, RejectsCorruptFiles) {
  TempDir dir;
  EXPECT_THROW(load_weights(dir / "none.bin"), ParseError);
  EXPECT_THROW(load_weights(dir.write("junk.bin", "not a weight file at all")), ParseError);

  WeightFile f;
  f.model = GcnModel::initialize(Architecture::Gcn2, 3, 2, 1);
  f.class_names = {"a", "b"};
  save_weights(f, dir / "w.bin");
  std::ifstream in(dir / "w.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_THROW(load_weights(dir.write("short.bin", bytes.substr(0, bytes.size() - 9))), ParseError);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(hash_bytes(""), "cbf29ce484222325");
  EXPECT_EQ(hash_bytes("a"), "af63dc4c8601ec8c");
}

TEST(Text, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  for (double x : {1.0 / 3.0, 2.0 / 7.0, 1e308, -4.9e-324, 123456.789}) {
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_EQ(parse_double("+2"), 2.0);
  EXPECT_TRUE(std::isinf(*parse_double("inf")));
}

TEST(Text, Splitting) {
  const auto f = split_whitespace("  a\t\tb  c\r");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[2], "c");
  const auto parts = split_on("1;;2", ';');
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
}

TEST(Random, UniformIndexCoversRangeAndSeedsMix) {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_GT(c, 800);
  EXPECT_EQ(uniform_index(rng, 1), 0u);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_unit(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(5, 3), mix_seed(5, 3));
}
