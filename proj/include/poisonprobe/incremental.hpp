#pragma once

#include <vector>

#include "poisonprobe/gcn.hpp"
#include "poisonprobe/graph.hpp"
#include "poisonprobe/matrix.hpp"

namespace poisonprobe {

/// Inference activations of the unperturbed graph, shared read-only by every
/// attack against the same model.
struct BaseActivations {
  /// S^(l) = Â H^(l) W^(l); the last entry is the clean logit matrix Z.
  std::vector<Matrix> pre_activations;

  static BaseActivations compute(const GcnModel& model, const NormalizedAdjacency& adj,
                                 const Matrix& features);
  [[nodiscard]] const Matrix& logits() const { return pre_activations.back(); }
};

/// Forward and reverse passes for a perturbation confined to a few feature rows.
///
/// Only the rows whose activations can change (within l+1 hops of a poisoned
/// node at layer l) and that can still reach a requested output row are
/// recomputed, as corrections on top of the cached clean activations. The cost
/// per call is the two dense row products on the poisoned rows plus
/// neighborhood-local work, independent of the graph size.
class LocalEvaluator {
 public:
  /// `poison` rows are the perturbed feature rows; `outputs` the nodes whose
  /// logits are needed. All referenced objects must outlive the evaluator.
  LocalEvaluator(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features,
                 const BaseActivations& base, std::vector<NodeId> poison,
                 std::vector<NodeId> outputs);

  /// Logits of the output rows (|outputs| x C) with the poison rows replaced
  /// by `perturbed_rows` (|poison| x d). Keeps the state needed by backward().
  const Matrix& forward(const Matrix& perturbed_rows);

  /// d(scalar)/d(perturbed rows) given d(scalar)/d(output logits), evaluated at
  /// the point of the last forward() call.
  [[nodiscard]] Matrix backward(const Matrix& output_adjoint) const;

  [[nodiscard]] const std::vector<NodeId>& poison() const { return poison_; }
  [[nodiscard]] const std::vector<NodeId>& outputs() const { return outputs_; }
  /// False when no poison row lies within the receptive field of any output.
  [[nodiscard]] bool reaches_outputs() const { return reaches_; }
  /// Number of rows recomputed per layer, for diagnostics.
  [[nodiscard]] std::vector<std::size_t> active_rows() const;

 private:
  struct Edge {
    std::size_t src;
    std::size_t dst;
    double weight;
  };

  const GcnModel& model_;
  const Matrix& features_;
  const BaseActivations& base_;
  std::vector<NodeId> poison_;
  std::vector<NodeId> outputs_;
  bool reaches_ = false;

  /// rows_[l]: global ids of the S^(l) rows recomputed at layer l.
  std::vector<std::vector<NodeId>> rows_;
  /// scatter_[l]: Â entries from layer-l delta sources into rows_[l].
  std::vector<std::vector<Edge>> scatter_;
  /// output index -> local row in rows_.back(), or -1 when unaffected.
  std::vector<long> output_local_;

  std::vector<Matrix> delta_;
  std::vector<Matrix> pre_;
  Matrix out_;
};

}  // namespace poisonprobe
