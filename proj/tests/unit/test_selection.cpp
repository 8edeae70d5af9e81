#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "poisonprobe/errors.hpp"
#include "poisonprobe/selection.hpp"
#include "property_checks.hpp"

using namespace poisonprobe;

namespace {

AttributedGraph make_graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  return AttributedGraph(Matrix(n, 1), CsrAdjacency::from_edges(n, edges), {}, 1);
}

EfficiencyTable table_of(std::vector<Candidate> candidates) {
  EfficiencyTable t;
  t.hops = 1;
  t.candidates = std::move(candidates);
  return t;
}

double chi_squared(const std::map<NodeId, int>& counts, int draws, std::size_t cells) {
  const double expected = static_cast<double>(draws) / static_cast<double>(cells);
  double chi = 0.0;
  for (const auto& [node, count] : counts) chi += (count - expected) * (count - expected) / expected;
  return chi;
}

}  // namespace

TEST(Efficiency, OneHopIsInverseTargetDegree) {
  const auto g = make_graph(3, {{0, 1}, {0, 2}});
  const auto t = poisoning_efficiency(g, 0, 1);
  ASSERT_EQ(t.candidates.size(), 2u);
  EXPECT_EQ(t.candidates[0], (Candidate{1, 0.5}));
  EXPECT_EQ(t.candidates[1], (Candidate{2, 0.5}));
  EXPECT_EQ(t.score(2), 0.5);
  EXPECT_FALSE(t.score(0).has_value());
}

TEST(Efficiency, TwoHopPathAndDiamondAndHub) {
  EXPECT_EQ(poisoning_efficiency(make_graph(3, {{0, 1}, {1, 2}}), 0, 2).score(2), 0.5);
  // two parallel shortest paths through degree-2 nodes add up
  EXPECT_EQ(poisoning_efficiency(make_graph(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}), 0, 2).score(3), 1.0);
  // a hub of degree 10 between the target and the candidate
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
  for (NodeId v = 2; v < 11; ++v) edges.emplace_back(1, v);
  const auto t = poisoning_efficiency(make_graph(11, edges), 0, 2);
  ASSERT_EQ(t.candidates.size(), 9u);
  for (const auto& c : t.candidates) EXPECT_DOUBLE_EQ(c.score, 0.1);
}

TEST(Efficiency, MatchesPathProductOracle) {
  const auto outcome = checks::efficiency_oracle(60, 41);
  EXPECT_TRUE(outcome.passed) << outcome.detail;
}

TEST(Efficiency, RejectsBadHopCounts) {
  const auto g = make_graph(3, {{0, 1}, {1, 2}});
  EXPECT_THROW(poisoning_efficiency(g, 0, 0), InvalidArgument);
  const auto tree = build_neighborhood_tree(g, 0, 1);
  EXPECT_THROW(poisoning_efficiency(tree, g, 2), InvalidArgument);
  EXPECT_TRUE(poisoning_efficiency(g, 0, 3).empty());
}

TEST(Selection, UniqueMaximumMakesNoDraw) {
  const auto t = table_of({{4, 0.2}, {7, 0.5}, {9, 0.1}});
  Rng rng(1);
  const Rng before = rng;
  EXPECT_EQ(select_poison_node(t, rng), 7u);
  EXPECT_EQ(select_bottom_node(t, rng), 9u);
  EXPECT_EQ(rng, before);
  EXPECT_EQ(select_top_k(t, 2, rng), (std::vector<NodeId>{7, 4}));
  EXPECT_EQ(select_top_k(t, 5, rng), (std::vector<NodeId>{7, 4, 9}));
  EXPECT_EQ(rng, before);
  EXPECT_THROW(select_top_k(t, 0, rng), InvalidArgument);
}

TEST(Selection, EmptyTableThrows) {
  Rng rng(1);
  EXPECT_THROW(select_poison_node(EfficiencyTable{}, rng), NoCandidateError);
  EXPECT_THROW(select_bottom_node(EfficiencyTable{}, rng), NoCandidateError);
  EXPECT_TRUE(select_top_k(EfficiencyTable{}, 2, rng).empty());
}

TEST(Selection, TiesWithinToleranceAreUniform) {
  // the two maxima differ by less than the relative tie tolerance
  const double top = 1.0 / 3.0;
  const auto t = table_of({{1, top}, {2, 0.25}, {5, top * (1.0 + 1e-14)}});
  EXPECT_TRUE(same_score(top, top * (1.0 + 1e-14)));
  EXPECT_FALSE(same_score(0.25, 0.25 * (1.0 + 1e-10)));
  Rng rng(99);
  std::map<NodeId, int> counts;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++counts[select_poison_node(t, rng)];
  ASSERT_EQ(counts.size(), 2u);
  EXPECT_EQ(counts.count(2), 0u);
  // 1 degree of freedom, p = 0.001
  EXPECT_LT(chi_squared(counts, kDraws, 2), 10.83);

  const auto four = table_of({{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}});
  std::map<NodeId, int> bottom;
  for (int i = 0; i < kDraws; ++i) ++bottom[select_bottom_node(four, rng)];
  ASSERT_EQ(bottom.size(), 4u);
  // 3 degrees of freedom, p = 0.001
  EXPECT_LT(chi_squared(bottom, kDraws, 4), 16.27);
}

TEST(Selection, TopKWalksDownTheScores) {
  const auto t = table_of({{0, 0.1}, {1, 0.3}, {2, 0.3}, {3, 0.2}, {4, 0.05}});
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto top = select_top_k(t, 3, rng);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_TRUE((top[0] == 1 && top[1] == 2) || (top[0] == 2 && top[1] == 1));
    EXPECT_EQ(top[2], 3u);
  }
}

TEST(Selection, DistinctCandidatesOnePerScore) {
  const auto t = table_of({{0, 0.1}, {1, 0.3}, {2, 0.3}, {3, 0.2}, {4, 0.1}, {5, 0.3}});
  Rng rng(8);
  std::map<NodeId, int> picked_top;
  for (int i = 0; i < 300; ++i) {
    const auto d = distinct_efficiency_candidates(t, rng);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].score, 0.3);
    EXPECT_EQ(d[1], (Candidate{3, 0.2}));
    EXPECT_EQ(d[2].score, 0.1);
    ++picked_top[d[0].node];
  }
  EXPECT_EQ(picked_top.size(), 3u);
}
