#pragma once

// Randomized property checks shared by the unit tests (small counts) and the
// acceptance binary (full counts).

#include <cstdint>
#include <string>

namespace checks {

struct Outcome {
  bool passed = true;
  /// Human-readable summary of what was checked and the worst deviation.
  std::string detail;
};

/// Weight gradients (training mode, with dropout) and feature gradients
/// (inference mode) against central finite differences, on `graphs` random
/// graphs per architecture.
Outcome gradient_oracle(int graphs, std::uint64_t seed, double tolerance = 1e-4);

/// GCN(2) logits of every node are bit-identical after rewriting any feature
/// row at 3 or more hops, and attacks from such rows fail with a zero logit
/// gradient.
Outcome receptive_field(int graphs, std::uint64_t seed);

/// LocalEvaluator logits against a dense forward of the patched feature
/// matrix over `perturbations` random cases; also checks backward() against
/// the dense feature gradient.
Outcome incremental_equivalence(int perturbations, std::uint64_t seed, double tolerance = 1e-9);

/// poisoning_efficiency against the shortest-path product oracle, m = 1..3.
Outcome efficiency_oracle(int graphs, std::uint64_t seed, double tolerance = 1e-12);

}  // namespace checks
