#include "poisonprobe/attack.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "poisonprobe/adam.hpp"
#include "poisonprobe/errors.hpp"

namespace poisonprobe {

namespace {

/// Index of the largest entry other than `skip`; lowest index on ties.
std::size_t argmax_except(std::span<const double> row, std::size_t skip) {
  std::size_t best = skip == 0 ? 1 : 0;
  for (std::size_t i = best + 1; i < row.size(); ++i) {
    if (i != skip && row[i] > row[best]) best = i;
  }
  return best;
}

void check_class(std::span<const double> logits, ClassId c) {
  if (logits.size() < 2) throw ConfigError("margins need at least two classes");
  if (c < 0 || static_cast<std::size_t>(c) >= logits.size()) {
    throw InvalidArgument("class " + std::to_string(c) + " out of range");
  }
}

}  // namespace

double targeted_margin(std::span<const double> logits, ClassId target_class) {
  check_class(logits, target_class);
  const auto t = static_cast<std::size_t>(target_class);
  return logits[argmax_except(logits, t)] - logits[t];
}

double untargeted_margin(std::span<const double> logits, ClassId clean_class) {
  check_class(logits, clean_class);
  const auto c = static_cast<std::size_t>(clean_class);
  return logits[c] - logits[argmax_except(logits, c)];
}

double hinge_g(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features,
               NodeId u, ClassId target_class) {
  if (u >= features.rows()) throw InvalidArgument("node " + std::to_string(u) + " out of range");
  const Matrix z = forward_logits(model, adj, features);
  return hinge(targeted_margin(z.row(u), target_class));
}

double perturbation_distance(const Matrix& original_rows, const Matrix& perturbed_rows) {
  if (original_rows.rows() != perturbed_rows.rows() ||
      original_rows.cols() != perturbed_rows.cols()) {
    throw ConfigError("original and perturbed rows differ in shape");
  }
  double sum = 0.0;
  const auto a = original_rows.values();
  const auto b = perturbed_rows.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double attack_loss(const Matrix& original_rows, const Matrix& perturbed_rows, double margin,
                   double lambda) {
  return perturbation_distance(original_rows, perturbed_rows) + lambda * hinge(margin);
}

double infection_term(std::span<const double> logits, ClassId target_class, ClassId clean_label,
                      PenaltyMarginMode mode) {
  check_class(logits, target_class);
  check_class(logits, clean_label);
  const auto c = static_cast<std::size_t>(clean_label);
  const std::size_t skip =
      mode == PenaltyMarginMode::AsWritten ? static_cast<std::size_t>(target_class) : c;
  return hinge(logits[argmax_except(logits, skip)] - logits[c]);
}

double infection_penalty(const Matrix& logits, std::span<const NodeId> exclude,
                         ClassId target_class, std::span<const ClassId> clean_labels,
                         PenaltyMarginMode mode) {
  if (clean_labels.size() != logits.rows()) {
    throw ConfigError("need one clean label per logit row");
  }
  std::vector<bool> skip(logits.rows(), false);
  for (NodeId v : exclude) {
    if (v < skip.size()) skip[v] = true;
  }
  double total = 0.0;
  for (std::size_t q = 0; q < logits.rows(); ++q) {
    if (!skip[q]) total += infection_term(logits.row(q), target_class, clean_labels[q], mode);
  }
  return total;
}

void AttackConfig::validate() const {
  if (!(lambda_min_init >= 0.0 && lambda_min_init < lambda_init && lambda_init < lambda_max_init)) {
    throw ConfigError("need 0 <= lambda_min < lambda_init < lambda_max");
  }
  if (!std::isfinite(lambda_max_init)) throw ConfigError("lambda_max must be finite");
  if (max_search_steps < 1) throw ConfigError("max_search_steps must be at least 1");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be non-negative");
  if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) {
    throw ConfigError("clamp epsilon must lie in (0, 0.5)");
  }
  if (verify_every < 0) throw ConfigError("verify_every must be non-negative");
}

AttackContext::AttackContext(const GcnModel& model, const AttributedGraph& graph)
    : model_(model), graph_(graph), adj_(normalize(graph)),
      base_(BaseActivations::compute(model, adj_, graph.features())),
      clean_(predict(base_.logits())) {}

namespace {

/// One attack run: the tanh parameterization, the incremental evaluator and the
/// loss terms at the current point.
class Probe {
 public:
  Probe(const AttackContext& ctx, NodeId target, ClassId target_class,
        const std::vector<NodeId>& poison, const AttackConfig& config)
      : ctx_(ctx), config_(config), target_(target), t_(target_class), poison_(poison),
        local_(ctx.model(), ctx.adjacency(), ctx.graph().features(), ctx.base(), poison,
               output_nodes(ctx, target, poison, config.beta)) {
    const Matrix& x = ctx.graph().features();
    const std::size_t d = x.cols();
    original_ = Matrix(poison.size(), d);
    x_tilde_ = Matrix(poison.size(), d);
    const double bound = 1.0 - config.clamp_epsilon;
    for (std::size_t s = 0; s < poison.size(); ++s) {
      const auto src = x.row(poison[s]);
      std::copy(src.begin(), src.end(), original_.row(s).begin());
      auto xt = x_tilde_.row(s);
      for (std::size_t k = 0; k < d; ++k) xt[k] = std::atanh(std::clamp(2.0 * src[k] - 1.0, -bound, bound));
    }
    w_ = Matrix(poison.size(), d);
    perturbed_ = Matrix(poison.size(), d);
    tanh_ = Matrix(poison.size(), d);
    grad_ = Matrix(poison.size(), d);

    if (config.beta > 0.0) {
      std::vector<NodeId> exclude = poison;
      exclude.push_back(target);
      base_penalty_ = infection_penalty(ctx.clean_logits(), exclude, t_, ctx.clean_predictions(),
                                        config.penalty_mode);
      const auto& outs = local_.outputs();
      base_terms_.assign(outs.size(), 0.0);
      for (std::size_t o = 1; o < outs.size(); ++o) {
        base_terms_[o] = infection_term(ctx.clean_logits().row(outs[o]), t_,
                                        ctx.clean_predictions()[outs[o]], config.penalty_mode);
      }
    }
  }

  /// Restarts from w = 0 with weight lambda.
  void restart(double lambda) {
    lambda_ = lambda;
    w_.fill(0.0);
    evaluate();
  }

  /// Loss terms at the current w.
  void evaluate() {
    const auto w = w_.values();
    const auto xt = x_tilde_.values();
    auto th = tanh_.values();
    auto xp = perturbed_.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      th[k] = std::tanh(xt[k] + w[k]);
      xp[k] = 0.5 * (th[k] + 1.0);
      assert(xp[k] >= 0.0 && xp[k] <= 1.0);
    }
    last_ = &local_.forward(perturbed_);
    const Matrix& z = *last_;
    margin_ = targeted_margin(z.row(0), t_);
    distance_ = perturbation_distance(original_, perturbed_);
    penalty_ = 0.0;
    if (config_.beta > 0.0) {
      penalty_ = base_penalty_;
      for (std::size_t o = 1; o < z.rows(); ++o) {
        penalty_ += infection_term(z.row(o), t_, clean_label(o), config_.penalty_mode) - base_terms_[o];
      }
    }
    loss_ = distance_ + lambda_ * hinge(margin_) + config_.beta * penalty_;
  }

  /// dLoss/dw at the current point. Returns the norm of the part that came
  /// through the logits.
  double gradient() {
    const Matrix& z = last_logits();
    Matrix adjoint(z.rows(), z.cols());
    bool any = false;
    if (margin_ > 0.0) {
      const auto t = static_cast<std::size_t>(t_);
      adjoint(0, argmax_except(z.row(0), t)) += lambda_;
      adjoint(0, t) -= lambda_;
      any = true;
    }
    if (config_.beta > 0.0) {
      for (std::size_t o = 1; o < z.rows(); ++o) {
        const auto row = z.row(o);
        const auto c = static_cast<std::size_t>(clean_label(o));
        const std::size_t skip =
            config_.penalty_mode == PenaltyMarginMode::AsWritten ? static_cast<std::size_t>(t_) : c;
        const std::size_t j = argmax_except(row, skip);
        if (row[j] - row[c] > 0.0) {
          adjoint(o, j) += config_.beta;
          adjoint(o, c) -= config_.beta;
          any = true;
        }
      }
    }

    double logit_norm = 0.0;
    if (any) {
      grad_ = local_.backward(adjoint);
      logit_norm = std::sqrt(squared_norm(grad_.values()));
    } else {
      grad_.fill(0.0);
    }

    auto g = grad_.values();
    const auto xp = perturbed_.values();
    const auto x = original_.values();
    const auto th = tanh_.values();
    // the norm is not differentiable at zero; use the zero subgradient there
    if (distance_ >= 1e-12) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += (xp[k] - x[k]) / distance_;
    }
    for (std::size_t k = 0; k < g.size(); ++k) g[k] *= 0.5 * (1.0 - th[k] * th[k]);
    return logit_norm;
  }

  /// Largest |Z_incremental - Z_dense| over the output rows.
  double drift() const {
    const Matrix dense = forward_logits(ctx_.model(), ctx_.adjacency(), ctx_.graph().features(),
                                        poison_, perturbed_);
    const Matrix& z = last_logits();
    double worst = 0.0;
    for (std::size_t o = 0; o < z.rows(); ++o) {
      const auto a = z.row(o);
      const auto b = dense.row(local_.outputs()[o]);
      for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::abs(a[c] - b[c]));
    }
    return worst;
  }

  Matrix& w() { return w_; }
  [[nodiscard]] const Matrix& grad() const { return grad_; }
  [[nodiscard]] const Matrix& original() const { return original_; }
  [[nodiscard]] const Matrix& perturbed() const { return perturbed_; }
  [[nodiscard]] double loss() const { return loss_; }
  [[nodiscard]] double margin() const { return margin_; }
  [[nodiscard]] double distance() const { return distance_; }

 private:
  static std::vector<NodeId> output_nodes(const AttackContext& ctx, NodeId target,
                                          const std::vector<NodeId>& poison, double beta) {
    std::vector<NodeId> outputs{target};
    if (beta > 0.0) {
      const auto dist = bfs_distances(ctx.graph().adjacency(), poison, ctx.model().layers());
      std::vector<bool> skip(dist.size(), false);
      skip[target] = true;
      for (NodeId v : poison) skip[v] = true;
      for (NodeId q = 0; q < dist.size(); ++q) {
        if (dist[q] != kUnreached && !skip[q]) outputs.push_back(q);
      }
    }
    return outputs;
  }

  [[nodiscard]] const Matrix& last_logits() const { return *last_; }
  [[nodiscard]] ClassId clean_label(std::size_t o) const {
    return ctx_.clean_predictions()[local_.outputs()[o]];
  }

  const AttackContext& ctx_;
  const AttackConfig& config_;
  NodeId target_;
  ClassId t_;
  const std::vector<NodeId>& poison_;
  LocalEvaluator local_;
  Matrix original_, x_tilde_, w_, tanh_, perturbed_, grad_;
  const Matrix* last_ = nullptr;
  double base_penalty_ = 0.0;
  std::vector<double> base_terms_;
  double lambda_ = 0.0;
  double margin_ = 0.0, distance_ = 0.0, penalty_ = 0.0, loss_ = 0.0;
};

}  // namespace

AttackResult poison_probe(const AttackContext& context, NodeId target, ClassId target_class,
                          std::vector<NodeId> poison, const AttackConfig& config) {
  config.validate();
  const AttributedGraph& graph = context.graph();
  const std::size_t n = graph.node_count();
  if (target >= n) throw InvalidArgument("target node " + std::to_string(target) + " out of range");
  if (target_class < 0 || target_class >= graph.class_count()) {
    throw InvalidArgument("target class " + std::to_string(target_class) + " out of range");
  }
  if (graph.class_count() < 2) throw ConfigError("attacks need at least two classes");
  if (poison.empty()) throw InvalidArgument("poison set is empty");
  for (NodeId v : poison) {
    if (v >= n) throw InvalidArgument("poison node " + std::to_string(v) + " out of range");
    if (v == target) throw InvalidArgument("the target cannot be one of its own poison nodes");
  }
  {
    auto sorted = poison;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidArgument("poison nodes must be distinct");
    }
  }

  Probe probe(context, target, target_class, poison, config);

  AttackResult result;
  result.target = target;
  result.target_class = target_class;
  result.poison = poison;
  result.perturbed = probe.original();

  Adam adam(probe.w().size(), AdamParams{config.learning_rate, 0.9, 0.999, 1e-8});
  double lambda = config.lambda_init;
  double lambda_min = config.lambda_min_init;
  double lambda_max = config.lambda_max_init;
  double best_distance = std::numeric_limits<double>::infinity();

  for (int step = 0; step < config.max_search_steps; ++step) {
    result.lambda_trace.push_back(lambda);
    adam.reset();
    probe.restart(lambda);
    bool found = false;
    bool aborted = !std::isfinite(probe.loss());
    for (int it = 0; it < config.max_iter && !aborted; ++it) {
      const double norm = probe.gradient();
      result.max_logit_gradient_norm = std::max(result.max_logit_gradient_norm, norm);
      adam.step(probe.w().values(), probe.grad().values());
      probe.evaluate();
      if (!std::isfinite(probe.loss())) {
        aborted = true;
        break;
      }
      if (config.verify_every > 0 && (it + 1) % config.verify_every == 0) {
        result.max_incremental_drift = std::max(result.max_incremental_drift, probe.drift());
      }
      if (probe.margin() < 0.0) {
        found = true;
        if (probe.distance() < best_distance) {
          best_distance = probe.distance();
          result.perturbed = probe.perturbed();
          result.best_lambda = lambda;
          result.best_step = step;
          result.best_iteration = it;
        }
      }
    }
    if (aborted) {
      ++result.aborted_steps;
      found = false;
    }
    result.step_found.push_back(found);
    if (found) {
      lambda_max = lambda;
    } else {
      lambda_min = lambda;
    }
    lambda = 0.5 * (lambda_min + lambda_max);
  }

  result.success = result.best_step >= 0;
  result.distance = result.success ? best_distance : 0.0;

  const Matrix z = forward_logits(context.model(), context.adjacency(), graph.features(),
                                  result.poison, result.perturbed);
  result.final_margin = targeted_margin(z.row(target), target_class);
  if (result.success && !(result.final_margin < 0.0)) {
    // the incremental path and the dense path disagree on the sign; trust the
    // dense one
    result.success = false;
    result.perturbed = probe.original();
    result.distance = 0.0;
    result.final_margin = targeted_margin(context.clean_logits().row(target), target_class);
  }
  return result;
}

AttackResult poison_probe(const GcnModel& model, const AttributedGraph& graph, NodeId target,
                          ClassId target_class, std::vector<NodeId> poison,
                          const AttackConfig& config) {
  const AttackContext context(model, graph);
  return poison_probe(context, target, target_class, std::move(poison), config);
}

Matrix apply_perturbation(const Matrix& features, const AttackResult& result) {
  if (result.perturbed.rows() != result.poison.size() || result.perturbed.cols() != features.cols()) {
    throw ConfigError("attack result rows do not match the feature matrix");
  }
  Matrix out = features;
  for (std::size_t s = 0; s < result.poison.size(); ++s) {
    if (result.poison[s] >= features.rows()) throw InvalidArgument("poison node out of range");
    const auto src = result.perturbed.row(s);
    std::copy(src.begin(), src.end(), out.row(result.poison[s]).begin());
  }
  return out;
}

bool attack_success_check(const AttackContext& context, const AttackResult& result) {
  const Matrix z = forward_logits(context.model(), context.adjacency(), context.graph().features(),
                                  result.poison, result.perturbed);
  return targeted_margin(z.row(result.target), result.target_class) < 0.0;
}

bool attack_success_check(const GcnModel& model, const AttributedGraph& graph,
                          const AttackResult& result) {
  const NormalizedAdjacency adj = normalize(graph);
  const Matrix z = forward_logits(model, adj, apply_perturbation(graph.features(), result));
  return targeted_margin(z.row(result.target), result.target_class) < 0.0;
}

}  // namespace poisonprobe
