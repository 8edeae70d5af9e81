#include "poisonprobe/adam.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace poisonprobe {

Adam::Adam(std::size_t size, AdamParams params) : p_(params), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  assert(params.size() == m_.size() && grads.size() == m_.size());
  ++t_;
  const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    m_[k] = p_.beta1 * m_[k] + (1.0 - p_.beta1) * g;
    v_[k] = p_.beta2 * v_[k] + (1.0 - p_.beta2) * g * g;
    const double m_hat = m_[k] / c1;
    const double v_hat = v_[k] / c2;
    params[k] -= p_.learning_rate * m_hat / (std::sqrt(v_hat) + p_.epsilon);
  }
}

void Adam::reset() {
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  t_ = 0;
}

}  // namespace poisonprobe
