#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisonprobe/graph.hpp"
#include "poisonprobe/matrix.hpp"
#include "poisonprobe/random.hpp"
#include "poisonprobe/splits.hpp"

namespace poisonprobe {

enum class Architecture { Gcn2, Gcn3, Gcn4 };

std::string_view to_string(Architecture arch);
/// Accepts "gcn2", "GCN(2)", "2" and the like. Throws ConfigError otherwise.
Architecture parse_architecture(std::string_view text);
/// Number of graph-convolution layers (= receptive field in hops).
int layer_count(Architecture arch);
/// Hidden widths between the input features and the class logits.
std::vector<std::size_t> hidden_widths(Architecture arch);

/// Stack of graph convolutions H^(l+1) = ReLU(Â H^(l) W^(l)); the last layer
/// has no activation and produces the logits Z. There are no bias terms.
struct GcnModel {
  Architecture architecture = Architecture::Gcn2;
  int class_count = 0;
  std::uint64_t seed = 0;
  /// weights[l] is in_dim x out_dim.
  std::vector<Matrix> weights;

  /// Glorot-uniform initialization.
  static GcnModel initialize(Architecture arch, std::size_t input_dim, int class_count,
                             std::uint64_t seed);

  [[nodiscard]] std::size_t input_dim() const { return weights.front().rows(); }
  [[nodiscard]] int layers() const { return static_cast<int>(weights.size()); }
  [[nodiscard]] std::size_t parameter_count() const;

  friend bool operator==(const GcnModel&, const GcnModel&) = default;
};

/// Everything one forward pass produced, enough to replay it or run it in reverse.
struct Tape {
  /// H^(0); not owned, must outlive the tape.
  const Matrix* features = nullptr;
  /// H^(l) for l = 1..L-1 (post-ReLU), stored at index l-1.
  std::vector<Matrix> hidden;
  /// S^(l) = Â drop(H^(l)) W^(l) for l = 0..L-1. The last one is Z.
  std::vector<Matrix> pre_activations;
  /// Per-layer dropout keep flags over the layer input; empty in inference mode.
  std::vector<std::vector<std::uint8_t>> keep;
  double dropout_rate = 0.0;

  [[nodiscard]] const Matrix& logits() const { return pre_activations.back(); }
  [[nodiscard]] const Matrix& layer_input(int l) const {
    return l == 0 ? *features : hidden[static_cast<std::size_t>(l - 1)];
  }
  [[nodiscard]] bool training() const { return !keep.empty(); }
};

/// Forward pass recording a tape. With dropout_rate > 0 a keep mask is drawn
/// from `rng` for every layer input (inverted dropout).
Tape record_forward(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features,
                    double dropout_rate = 0.0, Rng* rng = nullptr);

/// Recomputes the logits from the tape's inputs and dropout masks.
Matrix replay_forward(const GcnModel& model, const NormalizedAdjacency& adj, const Tape& tape);

/// Inference-mode logits Z (n x C).
Matrix forward_logits(const GcnModel& model, const NormalizedAdjacency& adj,
                      const Matrix& features);

/// Inference-mode logits with the rows `replaced_rows` of the feature matrix
/// substituted by the rows of `replacement`, without copying the features.
Matrix forward_logits(const GcnModel& model, const NormalizedAdjacency& adj,
                      const Matrix& features, std::span<const NodeId> replaced_rows,
                      const Matrix& replacement);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<ClassId> predict(const Matrix& logits);
ClassId argmax_row(std::span<const double> row);
std::vector<ClassId> predict(const GcnModel& model, const NormalizedAdjacency& adj,
                             const Matrix& features);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Matrix> weight_grads;
};

/// Mean softmax cross-entropy over `mask` and its exact gradient with respect
/// to every weight matrix, back-propagated through the recorded tape.
/// Throws ConfigError on an empty mask.
LossAndGrads loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                            std::span<const ClassId> labels, std::span<const NodeId> mask,
                            const Tape& tape);

/// Loss only (no gradients), used by finite-difference checks and validation.
double cross_entropy(const Matrix& logits, std::span<const ClassId> labels,
                     std::span<const NodeId> mask);

/// d(scalar)/dX restricted to `rows`, given the adjoint dscalar/dZ (n x C).
/// Inference mode. This is the dense reference path; the attack uses the
/// incremental evaluator instead.
Matrix feature_gradient(const GcnModel& model, const NormalizedAdjacency& adj,
                        const Matrix& features, const Matrix& logit_adjoint,
                        std::span<const NodeId> rows);

struct TrainConfig {
  double learning_rate = 0.01;
  double dropout_rate = 0.5;
  int max_epochs = 200;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  int best_epoch = 0;
  int epochs_run = 0;
  double final_train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double unlabeled_accuracy = 0.0;
};

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> labels,
                std::span<const NodeId> nodes);

/// Full-batch Adam training. Keeps the weights of the epoch with the best
/// validation accuracy (validation loss breaks ties). Throws TrainingError on a
/// non-finite loss.
TrainReport train(GcnModel& model, const AttributedGraph& graph, const Split& split,
                  const TrainConfig& config);

}  // namespace poisonprobe
