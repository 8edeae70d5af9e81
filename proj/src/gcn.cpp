#include "poisonprobe/gcn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "poisonprobe/adam.hpp"
#include "poisonprobe/errors.hpp"

namespace poisonprobe {

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::Gcn2: return "gcn2";
    case Architecture::Gcn3: return "gcn3";
    case Architecture::Gcn4: return "gcn4";
  }
  return "gcn2";
}

Architecture parse_architecture(std::string_view text) {
  std::string digits;
  for (char c : text) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  }
  std::string lower;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (lower.empty() || lower == "gcn") {
    if (digits == "2") return Architecture::Gcn2;
    if (digits == "3") return Architecture::Gcn3;
    if (digits == "4") return Architecture::Gcn4;
  }
  throw ConfigError("unknown architecture '" + std::string(text) + "' (expected gcn2, gcn3 or gcn4)");
}

int layer_count(Architecture arch) {
  return static_cast<int>(hidden_widths(arch).size()) + 1;
}

std::vector<std::size_t> hidden_widths(Architecture arch) {
  switch (arch) {
    case Architecture::Gcn2: return {16};
    case Architecture::Gcn3: return {64, 16};
    case Architecture::Gcn4: return {256, 64, 16};
  }
  return {16};
}

GcnModel GcnModel::initialize(Architecture arch, std::size_t input_dim, int class_count,
                              std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("input dimension must be positive");
  if (class_count < 1) throw ConfigError("class count must be positive");
  GcnModel model;
  model.architecture = arch;
  model.class_count = class_count;
  model.seed = seed;
  std::vector<std::size_t> dims{input_dim};
  for (std::size_t w : hidden_widths(arch)) dims.push_back(w);
  dims.push_back(static_cast<std::size_t>(class_count));

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l], dims[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    for (double& x : w.values()) x = (2.0 * uniform_unit(rng) - 1.0) * limit;
    model.weights.push_back(std::move(w));
  }
  return model;
}

std::size_t GcnModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& w : weights) total += w.size();
  return total;
}

namespace {

void check_dims(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features) {
  if (model.weights.empty()) throw ConfigError("model has no layers");
  if (features.cols() != model.input_dim()) {
    throw ConfigError("feature dimension " + std::to_string(features.cols()) +
                      " does not match model input dimension " +
                      std::to_string(model.input_dim()));
  }
  if (features.rows() != adj.node_count()) {
    throw ConfigError("feature rows " + std::to_string(features.rows()) +
                      " do not match node count " + std::to_string(adj.node_count()));
  }
}

/// drop(input) * W, skipping zero and dropped entries.
Matrix dropped_product(const Matrix& input, const std::vector<std::uint8_t>* keep, double scale,
                       const Matrix& w) {
  Matrix out(input.rows(), w.cols());
  for (std::size_t i = 0; i < input.rows(); ++i) {
    const auto in = input.row(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < in.size(); ++k) {
      double x = in[k];
      if (x == 0.0) continue;
      if (keep != nullptr) {
        if ((*keep)[i * in.size() + k] == 0) continue;
        x *= scale;
      }
      axpy(x, w.row(k), dst);
    }
  }
  return out;
}

Matrix relu(const Matrix& s) {
  Matrix h = s;
  for (double& x : h.values()) x = x > 0.0 ? x : 0.0;
  return h;
}

std::vector<std::uint8_t> draw_keep_mask(const Matrix& input, double rate, Rng& rng) {
  std::vector<std::uint8_t> keep(input.size(), 0);
  const auto values = input.values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    // the mask of a zero entry never matters, so no draw is spent on it
    if (values[k] == 0.0) continue;
    keep[k] = uniform_unit(rng) >= rate ? 1 : 0;
  }
  return keep;
}

Matrix run_layers(const GcnModel& model, const NormalizedAdjacency& adj, Tape& tape, Rng* rng,
                  bool replay) {
  const int layers = model.layers();
  const double scale = tape.dropout_rate > 0.0 ? 1.0 / (1.0 - tape.dropout_rate) : 1.0;
  tape.hidden.clear();
  tape.pre_activations.clear();
  for (int l = 0; l < layers; ++l) {
    const Matrix& input = tape.layer_input(l);
    const std::vector<std::uint8_t>* keep = nullptr;
    if (tape.dropout_rate > 0.0) {
      if (!replay) tape.keep.push_back(draw_keep_mask(input, tape.dropout_rate, *rng));
      keep = &tape.keep[static_cast<std::size_t>(l)];
    }
    const Matrix product = dropped_product(input, keep, scale, model.weights[static_cast<std::size_t>(l)]);
    tape.pre_activations.push_back(spmm(adj, product));
    if (l + 1 < layers) tape.hidden.push_back(relu(tape.pre_activations.back()));
  }
  return tape.logits();
}

}  // namespace

Tape record_forward(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& features,
                    double dropout_rate, Rng* rng) {
  check_dims(model, adj, features);
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (dropout_rate > 0.0 && rng == nullptr) throw ConfigError("dropout requires a random engine");
  Tape tape;
  tape.features = &features;
  tape.dropout_rate = dropout_rate;
  run_layers(model, adj, tape, rng, false);
  return tape;
}

Matrix replay_forward(const GcnModel& model, const NormalizedAdjacency& adj, const Tape& tape) {
  Tape copy;
  copy.features = tape.features;
  copy.dropout_rate = tape.dropout_rate;
  copy.keep = tape.keep;
  return run_layers(model, adj, copy, nullptr, true);
}

Matrix forward_logits(const GcnModel& model, const NormalizedAdjacency& adj,
                      const Matrix& features) {
  Tape tape = record_forward(model, adj, features);
  return std::move(tape.pre_activations.back());
}

Matrix forward_logits(const GcnModel& model, const NormalizedAdjacency& adj,
                      const Matrix& features, std::span<const NodeId> replaced_rows,
                      const Matrix& replacement) {
  check_dims(model, adj, features);
  if (replacement.rows() != replaced_rows.size() || replacement.cols() != features.cols()) {
    throw ConfigError("replacement rows have the wrong shape");
  }
  const Matrix& w0 = model.weights.front();
  Matrix product = dropped_product(features, nullptr, 1.0, w0);
  for (std::size_t r = 0; r < replaced_rows.size(); ++r) {
    const NodeId v = replaced_rows[r];
    if (v >= features.rows()) throw InvalidArgument("replaced row out of range");
    auto dst = product.row(v);
    std::fill(dst.begin(), dst.end(), 0.0);
    add_row_times(replacement.row(r), w0, dst);
  }
  Matrix pre = spmm(adj, product);
  for (int l = 1; l < model.layers(); ++l) {
    pre = spmm(adj, dropped_product(relu(pre), nullptr, 1.0, model.weights[static_cast<std::size_t>(l)]));
  }
  return pre;
}

ClassId argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<ClassId>(best);
}

std::vector<ClassId> predict(const Matrix& logits) {
  std::vector<ClassId> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) out[i] = argmax_row(logits.row(i));
  return out;
}

std::vector<ClassId> predict(const GcnModel& model, const NormalizedAdjacency& adj,
                             const Matrix& features) {
  return predict(forward_logits(model, adj, features));
}

namespace {

/// log-sum-exp of a row, shifted by its max.
double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double z : row) s += std::exp(z - m);
  return m + std::log(s);
}

void check_mask(std::span<const ClassId> labels, std::span<const NodeId> mask, std::size_t n) {
  if (mask.empty()) throw ConfigError("loss mask is empty");
  if (labels.size() != n) throw ConfigError("label vector length differs from node count");
  for (NodeId i : mask) {
    if (i >= n) throw ConfigError("mask node out of range");
  }
}

/// Back-propagates dZ through the tape. Fills weight gradients when requested
/// and returns d/d(layer-0 input) when `want_input_grad` is set.
Matrix backward(const GcnModel& model, const NormalizedAdjacency& adj, const Tape& tape,
                Matrix d_pre, std::vector<Matrix>* weight_grads, bool want_input_grad) {
  const int layers = model.layers();
  const double scale = tape.dropout_rate > 0.0 ? 1.0 / (1.0 - tape.dropout_rate) : 1.0;
  if (weight_grads != nullptr) weight_grads->assign(static_cast<std::size_t>(layers), Matrix{});
  Matrix input_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const Matrix& w = model.weights[li];
    const Matrix& input = tape.layer_input(l);
    const std::vector<std::uint8_t>* keep = tape.training() ? &tape.keep[li] : nullptr;
    const Matrix d_product = spmm(adj, d_pre);  // Â is symmetric

    if (weight_grads != nullptr) {
      Matrix dw(w.rows(), w.cols());
      for (std::size_t i = 0; i < input.rows(); ++i) {
        const auto in = input.row(i);
        for (std::size_t k = 0; k < in.size(); ++k) {
          double x = in[k];
          if (x == 0.0) continue;
          if (keep != nullptr) {
            if ((*keep)[i * in.size() + k] == 0) continue;
            x *= scale;
          }
          axpy(x, d_product.row(i), dw.row(k));
        }
      }
      (*weight_grads)[li] = std::move(dw);
    }

    if (l == 0 && !want_input_grad) break;
    Matrix d_input = matmul_a_bt(d_product, w);
    if (keep != nullptr) {
      auto v = d_input.values();
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = (*keep)[k] != 0 ? v[k] * scale : 0.0;
    }
    if (l == 0) {
      input_grad = std::move(d_input);
      break;
    }
    const Matrix& s_prev = tape.pre_activations[li - 1];
    auto dv = d_input.values();
    const auto sv = s_prev.values();
    for (std::size_t k = 0; k < dv.size(); ++k) {
      if (!(sv[k] > 0.0)) dv[k] = 0.0;
    }
    d_pre = std::move(d_input);
  }
  return input_grad;
}

}  // namespace

double cross_entropy(const Matrix& logits, std::span<const ClassId> labels,
                     std::span<const NodeId> mask) {
  check_mask(labels, mask, logits.rows());
  double total = 0.0;
  for (NodeId i : mask) {
    const auto row = logits.row(i);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(mask.size());
}

LossAndGrads loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                            std::span<const ClassId> labels, std::span<const NodeId> mask,
                            const Tape& tape) {
  const Matrix& z = tape.logits();
  check_mask(labels, mask, z.rows());
  LossAndGrads out;
  Matrix dz(z.rows(), z.cols());
  const double inv = 1.0 / static_cast<double>(mask.size());
  double total = 0.0;
  for (NodeId i : mask) {
    const auto row = z.row(i);
    const double lse = log_sum_exp(row);
    const auto y = static_cast<std::size_t>(labels[i]);
    total += lse - row[y];
    auto d = dz.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) d[c] += std::exp(row[c] - lse) * inv;
    d[y] -= inv;
  }
  out.loss = total * inv;
  backward(model, adj, tape, std::move(dz), &out.weight_grads, false);
  return out;
}

Matrix feature_gradient(const GcnModel& model, const NormalizedAdjacency& adj,
                        const Matrix& features, const Matrix& logit_adjoint,
                        std::span<const NodeId> rows) {
  for (NodeId r : rows) {
    if (r >= features.rows()) throw InvalidArgument("feature row " + std::to_string(r) + " out of range");
  }
  const Tape tape = record_forward(model, adj, features);
  if (logit_adjoint.rows() != features.rows() ||
      logit_adjoint.cols() != static_cast<std::size_t>(model.class_count)) {
    throw ConfigError("logit adjoint has wrong shape");
  }
  const Matrix full = backward(model, adj, tape, logit_adjoint, nullptr, true);
  Matrix out(rows.size(), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(full.row(rows[r]).begin(), full.row(rows[r]).end(), out.row(r).begin());
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
}

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> labels,
                std::span<const NodeId> nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t hits = 0;
  for (NodeId i : nodes) hits += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

TrainReport train(GcnModel& model, const AttributedGraph& graph, const Split& split,
                  const TrainConfig& config) {
  config.validate();
  if (!graph.has_labels()) throw ConfigError("training requires node labels");
  if (split.node_count != graph.node_count()) throw ConfigError("split does not match graph size");
  if (split.train.empty()) throw ConfigError("training set is empty");
  // ReLU maps NaN to zero, so a bad starting weight would never show up in the loss
  for (const auto& w : model.weights) {
    for (double v : w.values()) {
      if (!std::isfinite(v)) throw TrainingError("non-finite initial weight");
    }
  }
  const NormalizedAdjacency adj = normalize(graph);
  const Matrix& x = graph.features();
  const auto& labels = graph.labels();

  std::vector<Adam> optimizers;
  const AdamParams adam{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  for (const auto& w : model.weights) optimizers.emplace_back(w.size(), adam);

  Rng rng(config.seed);
  TrainReport report;
  std::vector<Matrix> best_weights = model.weights;
  double best_val_acc = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  const auto& selection = split.validation.empty() ? split.train : split.validation;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const Tape tape = record_forward(model, adj, x, config.dropout_rate, &rng);
    LossAndGrads lg = loss_and_grads(model, adj, labels, split.train, tape);
    if (!std::isfinite(lg.loss)) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
    }
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      auto g = lg.weight_grads[l].values();
      const auto w = model.weights[l].values();
      if (config.weight_decay > 0.0) {
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += config.weight_decay * w[k];
      }
      optimizers[l].step(model.weights[l].values(), g);
    }
    report.final_train_loss = lg.loss;
    report.epochs_run = epoch;

    const Matrix z = forward_logits(model, adj, x);
    const auto pred = predict(z);
    const double val_acc = accuracy(pred, labels, selection);
    const double val_loss = cross_entropy(z, labels, selection);
    if (val_acc > best_val_acc || (val_acc == best_val_acc && val_loss < best_val_loss)) {
      best_val_acc = val_acc;
      best_val_loss = val_loss;
      best_weights = model.weights;
      report.best_epoch = epoch;
    }
  }
  model.weights = std::move(best_weights);

  const auto pred = predict(model, adj, x);
  report.train_accuracy = accuracy(pred, labels, split.train);
  report.validation_accuracy = accuracy(pred, labels, split.validation);
  report.unlabeled_accuracy = accuracy(pred, labels, split.unlabeled);
  return report;
}

}  // namespace poisonprobe
