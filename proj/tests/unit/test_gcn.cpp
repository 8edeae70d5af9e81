#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "poisonprobe/errors.hpp"
#include "poisonprobe/gcn.hpp"
#include "property_checks.hpp"

using namespace poisonprobe;

namespace {

/// Two 10-node cliques with one bridge; cluster membership is visible in the
/// features and the labels.
AttributedGraph two_clusters() {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId base : {NodeId{0}, NodeId{10}}) {
    for (NodeId i = 0; i < 10; ++i) {
      for (NodeId j = i + 1; j < 10; ++j) edges.emplace_back(base + i, base + j);
    }
  }
  edges.emplace_back(9, 10);
  Matrix x(20, 4);
  std::vector<ClassId> labels(20);
  for (NodeId i = 0; i < 20; ++i) {
    labels[i] = i < 10 ? 0 : 1;
    x(i, i < 10 ? 0 : 1) = 1.0;
    x(i, 2 + i % 2) = 1.0;
  }
  return AttributedGraph(std::move(x), CsrAdjacency::from_edges(20, edges), std::move(labels), 2);
}

Split cluster_split() {
  Split s;
  s.node_count = 20;
  s.train = {0, 1, 10, 11};
  s.validation = {2, 12};
  for (NodeId i = 0; i < 20; ++i) {
    if (i % 10 > 2) s.unlabeled.push_back(i);
  }
  return s;
}

}  // namespace

TEST(Architecture, ParsingAndShapes) {
  EXPECT_EQ(parse_architecture("gcn2"), Architecture::Gcn2);
  EXPECT_EQ(parse_architecture("GCN(3)"), Architecture::Gcn3);
  EXPECT_EQ(parse_architecture("4"), Architecture::Gcn4);
  EXPECT_THROW(parse_architecture("gcn5"), ConfigError);
  EXPECT_EQ(hidden_widths(Architecture::Gcn2), (std::vector<std::size_t>{16}));
  EXPECT_EQ(hidden_widths(Architecture::Gcn3), (std::vector<std::size_t>{64, 16}));
  EXPECT_EQ(hidden_widths(Architecture::Gcn4), (std::vector<std::size_t>{256, 64, 16}));
  EXPECT_EQ(layer_count(Architecture::Gcn4), 4);

  const auto m = GcnModel::initialize(Architecture::Gcn3, 10, 3, 1);
  ASSERT_EQ(m.weights.size(), 3u);
  EXPECT_EQ(m.weights[0].rows(), 10u);
  EXPECT_EQ(m.weights[0].cols(), 64u);
  EXPECT_EQ(m.weights[2].cols(), 3u);
  EXPECT_EQ(m.parameter_count(), 10u * 64 + 64 * 16 + 16 * 3);
}

TEST(Initialize, GlorotBoundsAndSeeding) {
  const auto a = GcnModel::initialize(Architecture::Gcn2, 50, 5, 9);
  const auto b = GcnModel::initialize(Architecture::Gcn2, 50, 5, 9);
  const auto c = GcnModel::initialize(Architecture::Gcn2, 50, 5, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.weights[0], c.weights[0]);
  for (const Matrix& w : a.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    double mean = 0.0;
    for (double v : w.values()) {
      EXPECT_LE(std::abs(v), bound);
      mean += v;
    }
    EXPECT_NEAR(mean / static_cast<double>(w.size()), 0.0, bound * 0.2);
  }
}

TEST(Forward, MatchesDenseOracle) {
  oracle::Engine rng(3);
  for (Architecture arch : {Architecture::Gcn2, Architecture::Gcn3, Architecture::Gcn4}) {
    for (int g = 0; g < 5; ++g) {
      const std::size_t n = 1 + oracle::below(rng, 25);
      const auto graph = oracle::random_graph(n, 6, 3, 0.2, rng, g % 2 == 0);
      const auto model = GcnModel::initialize(arch, 6, 3, rng());
      const auto adj = normalize(graph);
      const Matrix z = forward_logits(model, adj, graph.features());
      const Matrix ref =
          oracle::dense_logits(model.weights, oracle::dense_normalized(graph.adjacency()), graph.features());
      ASSERT_EQ(z.rows(), n);
      for (std::size_t k = 0; k < z.size(); ++k) {
        EXPECT_TRUE(oracle::close_relative(z.values()[k], ref.values()[k], 1e-12, 1e-14));
      }
      // the tape replays to the same bits
      const Tape tape = record_forward(model, adj, graph.features());
      EXPECT_EQ(tape.logits(), z);
      EXPECT_EQ(replay_forward(model, adj, tape), z);
    }
  }
}

TEST(Forward, ReplacedRowsMatchPatchedFeatures) {
  oracle::Engine rng(4);
  const auto graph = oracle::random_graph(15, 5, 3, 0.25, rng);
  const auto model = GcnModel::initialize(Architecture::Gcn3, 5, 3, 2);
  const auto adj = normalize(graph);
  const std::vector<NodeId> rows{2, 7};
  Matrix replacement(2, 5);
  for (double& v : replacement.values()) v = oracle::unit(rng);
  Matrix x = graph.features();
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t k = 0; k < 5; ++k) x(rows[s], k) = replacement(s, k);
  }
  const Matrix want = forward_logits(model, adj, x);
  const Matrix got = forward_logits(model, adj, graph.features(), rows, replacement);
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got.values()[k], want.values()[k], 1e-13);
}

TEST(Forward, DropoutTapeReplays) {
  oracle::Engine rng(6);
  const auto graph = oracle::random_graph(12, 4, 2, 0.3, rng);
  const auto model = GcnModel::initialize(Architecture::Gcn2, 4, 2, 1);
  const auto adj = normalize(graph);
  Rng drop(5);
  const Tape tape = record_forward(model, adj, graph.features(), 0.5, &drop);
  ASSERT_TRUE(tape.training());
  EXPECT_EQ(replay_forward(model, adj, tape), tape.logits());
  const oracle::Masks masks{tape.keep, 2.0};
  const Matrix ref = oracle::dense_logits(model.weights, oracle::dense_normalized(graph.adjacency()),
                                          graph.features(), &masks);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(tape.logits().values()[k], ref.values()[k], 1e-13);
}

TEST(Predict, TiesGoToLowestClass) {
  const std::vector<double> row{0.5, 2.0, 2.0, -1.0};
  EXPECT_EQ(argmax_row(row), 1);
  Matrix z(2, 3);
  z(1, 2) = 1.0;
  EXPECT_EQ(predict(z), (std::vector<ClassId>{0, 2}));
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  for (int c : {2, 3, 7}) {
    const Matrix z(4, static_cast<std::size_t>(c));
    const std::vector<ClassId> labels{0, 1, 1, 0};
    const std::vector<NodeId> mask{0, 1, 3};
    EXPECT_NEAR(cross_entropy(z, labels, mask), std::log(static_cast<double>(c)), 1e-15);
  }
  // a single class is always right
  const Matrix one(3, 1, 4.0);
  const std::vector<ClassId> labels{0, 0, 0};
  const std::vector<NodeId> mask{0, 2};
  EXPECT_EQ(cross_entropy(one, labels, mask), 0.0);
  EXPECT_THROW(cross_entropy(one, labels, std::vector<NodeId>{}), ConfigError);
}

TEST(CrossEntropy, StableForHugeLogits) {
  Matrix z(1, 2);
  z(0, 0) = 1000.0;
  z(0, 1) = -1000.0;
  const std::vector<ClassId> labels{1};
  const std::vector<NodeId> mask{0};
  EXPECT_NEAR(cross_entropy(z, labels, mask), 2000.0, 1e-9);
}

TEST(Gradients, ZeroWeightsGiveLogCAndNoFeatureGradient) {
  oracle::Engine rng(8);
  const auto graph = oracle::random_graph(8, 3, 4, 0.4, rng);
  auto model = GcnModel::initialize(Architecture::Gcn2, 3, 4, 1);
  for (Matrix& w : model.weights) w.fill(0.0);
  const auto adj = normalize(graph);
  const std::vector<NodeId> mask{0, 1, 2};
  const Tape tape = record_forward(model, adj, graph.features());
  const auto lg = loss_and_grads(model, adj, graph.labels(), mask, tape);
  EXPECT_NEAR(lg.loss, std::log(4.0), 1e-15);
  const std::vector<NodeId> rows{0, 5};
  const Matrix g = feature_gradient(model, adj, graph.features(), Matrix(8, 4, 1.0), rows);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, FiniteDifferenceOracle) {
  const auto outcome = checks::gradient_oracle(2, 17);
  EXPECT_TRUE(outcome.passed) << outcome.detail;
}

TEST(ReceptiveField, DistantRowsNeverMatter) {
  const auto outcome = checks::receptive_field(4, 23);
  EXPECT_TRUE(outcome.passed) << outcome.detail;
}

TEST(ReceptiveField, DeeperModelsSeeFurther) {
  // path 0-1-2-3-4: node 0 sees node 3 only with three layers
  const std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  Matrix x(5, 2, 0.5);
  const AttributedGraph g(x, CsrAdjacency::from_edges(5, edges), {}, 2);
  const auto adj = normalize(g);
  Matrix moved = x;
  moved(3, 0) = 1.0;
  moved(3, 1) = 0.0;
  for (Architecture arch : {Architecture::Gcn2, Architecture::Gcn3}) {
    const auto model = GcnModel::initialize(arch, 2, 2, 12);
    const Matrix before = forward_logits(model, adj, x);
    const Matrix after = forward_logits(model, adj, moved);
    const bool same = std::equal(before.row(0).begin(), before.row(0).end(), after.row(0).begin());
    EXPECT_EQ(same, arch == Architecture::Gcn2);
  }
}

TEST(Train, SeparatesTwoClustersWithinFiftyEpochs) {
  const auto graph = two_clusters();
  for (Architecture arch : {Architecture::Gcn2, Architecture::Gcn3}) {
    auto model = GcnModel::initialize(arch, 4, 2, 3);
    TrainConfig config;
    config.max_epochs = 50;
    config.seed = 4;
    const auto report = train(model, graph, cluster_split(), config);
    EXPECT_EQ(report.epochs_run, 50);
    EXPECT_EQ(report.train_accuracy, 1.0);
    EXPECT_EQ(report.validation_accuracy, 1.0);
    EXPECT_EQ(report.unlabeled_accuracy, 1.0);
    EXPECT_EQ(predict(model, normalize(graph), graph.features()), graph.labels());
  }
}

TEST(Train, IsDeterministic) {
  const auto graph = two_clusters();
  TrainConfig config;
  config.max_epochs = 20;
  config.seed = 11;
  auto a = GcnModel::initialize(Architecture::Gcn2, 4, 2, 3);
  auto b = a;
  train(a, graph, cluster_split(), config);
  train(b, graph, cluster_split(), config);
  EXPECT_EQ(a, b);
  config.seed = 12;
  auto c = GcnModel::initialize(Architecture::Gcn2, 4, 2, 3);
  train(c, graph, cluster_split(), config);
  EXPECT_NE(a, c);
}

TEST(Train, RejectsBadConfig) {
  TrainConfig config;
  config.dropout_rate = 1.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = TrainConfig{};
  config.learning_rate = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = TrainConfig{};
  config.max_epochs = 0;
  EXPECT_THROW(config.validate(), ConfigError);

  const auto graph = two_clusters();
  auto model = GcnModel::initialize(Architecture::Gcn2, 4, 2, 3);
  Split empty = cluster_split();
  empty.train.clear();
  EXPECT_THROW(train(model, graph, empty, TrainConfig{}), ConfigError);
}

TEST(Train, DivergenceIsReported) {
  const auto graph = two_clusters();
  auto model = GcnModel::initialize(Architecture::Gcn2, 4, 2, 3);
  for (double& v : model.weights[0].values()) v = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(model, graph, cluster_split(), TrainConfig{}), TrainingError);

  auto runaway = GcnModel::initialize(Architecture::Gcn2, 4, 2, 3);
  TrainConfig config;
  config.learning_rate = 1e300;
  config.weight_decay = 0.0;
  EXPECT_THROW(train(runaway, graph, cluster_split(), config), TrainingError);
}
