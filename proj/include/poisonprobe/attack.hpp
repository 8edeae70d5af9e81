#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "poisonprobe/gcn.hpp"
#include "poisonprobe/graph.hpp"
#include "poisonprobe/incremental.hpp"

namespace poisonprobe {

/// max_{i != t} z_i - z_t. Negative iff class t strictly dominates.
/// Throws ConfigError when there are fewer than two classes.
double targeted_margin(std::span<const double> logits, ClassId target_class);

/// z_c - max_{i != c} z_i. Negative iff the label moved away from c.
double untargeted_margin(std::span<const double> logits, ClassId clean_class);

/// (margin)_+
inline double hinge(double margin) { return margin > 0.0 ? margin : 0.0; }

/// Hinge of the targeted margin of node u under features X' (dense forward).
double hinge_g(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features,
               NodeId u, ClassId target_class);

/// Frobenius distance between the original and perturbed poison rows.
double perturbation_distance(const Matrix& original_rows, const Matrix& perturbed_rows);

/// ||X_V - X'_V||_2 + lambda * (margin)_+
double attack_loss(const Matrix& original_rows, const Matrix& perturbed_rows, double margin,
                   double lambda);

enum class PenaltyMarginMode {
  /// max over i != t, as the infection penalty is usually written
  AsWritten,
  /// max over i != c_q, i.e. the plain "label moved" margin
  VsCleanLabel,
};

/// One node's infection term (max_{i != t or c} Z_q,i - Z_q,c)_+.
double infection_term(std::span<const double> logits, ClassId target_class, ClassId clean_label,
                      PenaltyMarginMode mode);

/// Sum of infection terms over every node not in `exclude`.
double infection_penalty(const Matrix& logits, std::span<const NodeId> exclude,
                         ClassId target_class, std::span<const ClassId> clean_labels,
                         PenaltyMarginMode mode = PenaltyMarginMode::AsWritten);

struct AttackConfig {
  double lambda_init = 1.0;
  double lambda_min_init = 0.0;
  double lambda_max_init = 1e9;
  int max_search_steps = 9;
  int max_iter = 1000;
  /// Adam step size.
  double learning_rate = 0.01;
  /// Infection-penalty weight; 0 disables the penalty entirely.
  double beta = 0.0;
  PenaltyMarginMode penalty_mode = PenaltyMarginMode::AsWritten;
  /// The tanh parameterization starts from arctanh(clamp(2x - 1, +-(1 - eps))).
  double clamp_epsilon = 1e-6;
  std::uint64_t seed = 0;
  /// When positive, every `verify_every` iterations the incremental logits are
  /// compared against a dense forward pass and the drift is recorded.
  int verify_every = 0;

  void validate() const;
};

struct AttackResult {
  NodeId target = 0;
  ClassId target_class = 0;
  std::vector<NodeId> poison;
  /// Best perturbed rows x*_V; equal to the original rows when no success.
  Matrix perturbed;
  double distance = 0.0;
  bool success = false;
  double best_lambda = 0.0;
  /// lambda used at each search step, and whether that step found an adversarial.
  std::vector<double> lambda_trace;
  std::vector<bool> step_found;
  int best_step = -1;
  int best_iteration = -1;
  /// Targeted margin of the target at the returned rows (dense forward).
  double final_margin = 0.0;
  /// Largest norm of the feature gradient coming through the logits (hinge and
  /// penalty terms, without the distance term) seen during the run.
  double max_logit_gradient_norm = 0.0;
  /// Largest |Z_incremental - Z_dense| seen when verify_every > 0.
  double max_incremental_drift = 0.0;
  /// Search steps abandoned because the loss became non-finite.
  int aborted_steps = 0;
  std::optional<int> infections;
};

/// Shared read-only state for attacking one model on one graph.
class AttackContext {
 public:
  /// `model` and `graph` must outlive the context.
  AttackContext(const GcnModel& model, const AttributedGraph& graph);

  [[nodiscard]] const GcnModel& model() const { return model_; }
  [[nodiscard]] const AttributedGraph& graph() const { return graph_; }
  [[nodiscard]] const NormalizedAdjacency& adjacency() const { return adj_; }
  [[nodiscard]] const BaseActivations& base() const { return base_; }
  [[nodiscard]] const Matrix& clean_logits() const { return base_.logits(); }
  [[nodiscard]] const std::vector<ClassId>& clean_predictions() const { return clean_; }

 private:
  const GcnModel& model_;
  const AttributedGraph& graph_;
  NormalizedAdjacency adj_;
  BaseActivations base_;
  std::vector<ClassId> clean_;
};

/// Searches small perturbations of the poison rows that make `target` classify
/// as `target_class`: Adam on tanh-parameterized rows inside a binary search on
/// the hinge weight lambda. Throws InvalidArgument when target is a poison node
/// or the arguments are out of range.
AttackResult poison_probe(const AttackContext& context, NodeId target, ClassId target_class,
                          std::vector<NodeId> poison, const AttackConfig& config);

AttackResult poison_probe(const GcnModel& model, const AttributedGraph& graph, NodeId target,
                          ClassId target_class, std::vector<NodeId> poison,
                          const AttackConfig& config);

/// The feature matrix with the result's rows substituted.
Matrix apply_perturbation(const Matrix& features, const AttackResult& result);

/// Fresh dense forward pass; true iff the targeted margin is strictly negative.
bool attack_success_check(const GcnModel& model, const AttributedGraph& graph,
                          const AttackResult& result);
bool attack_success_check(const AttackContext& context, const AttackResult& result);

}  // namespace poisonprobe
