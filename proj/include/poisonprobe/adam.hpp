#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace poisonprobe {

struct AdamParams {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamParams params);

  /// params -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(std::span<double> params, std::span<const double> grads);
  void reset();

  [[nodiscard]] long steps() const { return t_; }

 private:
  AdamParams p_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace poisonprobe
