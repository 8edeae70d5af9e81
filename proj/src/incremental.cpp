#include "poisonprobe/incremental.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <string>

#include "poisonprobe/errors.hpp"

namespace poisonprobe {

BaseActivations BaseActivations::compute(const GcnModel& model, const NormalizedAdjacency& adj,
                                         const Matrix& features) {
  const Tape tape = record_forward(model, adj, features);
  BaseActivations base;
  base.pre_activations = tape.pre_activations;
  return base;
}

namespace {

std::vector<int> distances_from(const NormalizedAdjacency& adj, const std::vector<NodeId>& sources,
                                int max_depth) {
  std::vector<int> dist(adj.node_count(), kUnreached);
  std::deque<NodeId> queue;
  for (NodeId s : sources) {
    if (dist[s] == kUnreached) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    if (dist[v] >= max_depth) continue;
    for (std::size_t e = adj.row_begin(v); e < adj.row_end(v); ++e) {
      const NodeId w = adj.columns[e];
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

bool within(int d, int limit) { return d != kUnreached && d <= limit; }

}  // namespace

LocalEvaluator::LocalEvaluator(const GcnModel& model, const NormalizedAdjacency& adj,
                               const Matrix& features, const BaseActivations& base,
                               std::vector<NodeId> poison, std::vector<NodeId> outputs)
    : model_(model), features_(features), base_(base), poison_(std::move(poison)),
      outputs_(std::move(outputs)) {
  const std::size_t n = adj.node_count();
  const int layers = model.layers();
  if (features.rows() != n || features.cols() != model.input_dim()) {
    throw ConfigError("feature matrix shape does not match model and graph");
  }
  {
    auto sorted = poison_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidArgument("poison rows must be distinct");
    }
  }
  for (NodeId v : poison_) {
    if (v >= n) throw InvalidArgument("poison row " + std::to_string(v) + " out of range");
  }
  for (NodeId o : outputs_) {
    if (o >= n) throw InvalidArgument("output row " + std::to_string(o) + " out of range");
  }

  const auto dist_poison = distances_from(adj, poison_, layers);
  const auto dist_output = distances_from(adj, outputs_, layers);

  rows_.resize(static_cast<std::size_t>(layers));
  scatter_.resize(static_cast<std::size_t>(layers));
  std::vector<long> local(n, -1);
  for (int l = 0; l < layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    auto& rows = rows_[li];
    for (NodeId i = 0; i < n; ++i) {
      if (within(dist_poison[i], l + 1) && within(dist_output[i], layers - 1 - l)) rows.push_back(i);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) local[rows[r]] = static_cast<long>(r);

    const auto& sources = l == 0 ? poison_ : rows_[li - 1];
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const NodeId j = sources[s];
      for (std::size_t e = adj.row_begin(j); e < adj.row_end(j); ++e) {
        const long dst = local[adj.columns[e]];
        if (dst >= 0) scatter_[li].push_back({s, static_cast<std::size_t>(dst), adj.values[e]});
      }
    }
    for (NodeId r : rows) local[r] = -1;
  }

  output_local_.assign(outputs_.size(), -1);
  const auto& last = rows_.back();
  for (std::size_t o = 0; o < outputs_.size(); ++o) {
    const auto it = std::lower_bound(last.begin(), last.end(), outputs_[o]);
    if (it != last.end() && *it == outputs_[o]) {
      output_local_[o] = static_cast<long>(it - last.begin());
      reaches_ = true;
    }
  }

  delta_.resize(static_cast<std::size_t>(layers));
  pre_.resize(static_cast<std::size_t>(layers));
  out_ = Matrix(outputs_.size(), static_cast<std::size_t>(model.class_count));
}

const Matrix& LocalEvaluator::forward(const Matrix& perturbed_rows) {
  assert(perturbed_rows.rows() == poison_.size() && perturbed_rows.cols() == features_.cols());
  const int layers = model_.layers();

  // layer-0 delta: (x' - x) W^(0) on the poison rows
  const Matrix& w0 = model_.weights.front();
  delta_[0] = Matrix(poison_.size(), w0.cols());
  for (std::size_t s = 0; s < poison_.size(); ++s) {
    const auto xp = perturbed_rows.row(s);
    const auto x = features_.row(poison_[s]);
    auto dst = delta_[0].row(s);
    for (std::size_t k = 0; k < xp.size(); ++k) {
      const double diff = xp[k] - x[k];
      if (diff != 0.0) axpy(diff, w0.row(k), dst);
    }
  }

  for (int l = 0; l < layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const auto& rows = rows_[li];
    const Matrix& base_pre = base_.pre_activations[li];
    Matrix& pre = pre_[li];
    pre = Matrix(rows.size(), base_pre.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = base_pre.row(rows[r]);
      std::copy(src.begin(), src.end(), pre.row(r).begin());
    }
    for (const Edge& e : scatter_[li]) axpy(e.weight, delta_[li].row(e.src), pre.row(e.dst));

    if (l + 1 < layers) {
      // delta of the next product: (ReLU(S') - ReLU(S)) W^(l+1)
      const Matrix& w = model_.weights[li + 1];
      Matrix next(rows.size(), w.cols());
      std::vector<double> dh(pre.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto now = pre.row(r);
        const auto before = base_pre.row(rows[r]);
        for (std::size_t k = 0; k < dh.size(); ++k) {
          dh[k] = (now[k] > 0.0 ? now[k] : 0.0) - (before[k] > 0.0 ? before[k] : 0.0);
        }
        add_row_times(dh, w, next.row(r));
      }
      delta_[li + 1] = std::move(next);
    }
  }

  const Matrix& base_z = base_.logits();
  const Matrix& last = pre_.back();
  for (std::size_t o = 0; o < outputs_.size(); ++o) {
    const auto src = output_local_[o] >= 0 ? last.row(static_cast<std::size_t>(output_local_[o]))
                                           : base_z.row(outputs_[o]);
    std::copy(src.begin(), src.end(), out_.row(o).begin());
  }
  return out_;
}

Matrix LocalEvaluator::backward(const Matrix& output_adjoint) const {
  assert(output_adjoint.rows() == outputs_.size());
  const int layers = model_.layers();
  Matrix grad(poison_.size(), features_.cols());
  if (!reaches_) return grad;

  Matrix d_pre(rows_.back().size(), static_cast<std::size_t>(model_.class_count));
  for (std::size_t o = 0; o < outputs_.size(); ++o) {
    if (output_local_[o] < 0) continue;
    axpy(1.0, output_adjoint.row(o), d_pre.row(static_cast<std::size_t>(output_local_[o])));
  }

  for (int l = layers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const std::size_t source_count = l == 0 ? poison_.size() : rows_[li - 1].size();
    Matrix d_delta(source_count, d_pre.cols());
    for (const Edge& e : scatter_[li]) axpy(e.weight, d_pre.row(e.dst), d_delta.row(e.src));

    const Matrix& w = model_.weights[li];
    if (l == 0) {
      for (std::size_t s = 0; s < poison_.size(); ++s) {
        add_row_times_transposed(d_delta.row(s), w, grad.row(s));
      }
      break;
    }
    const Matrix& pre_prev = pre_[li - 1];
    Matrix next(source_count, w.rows());
    for (std::size_t r = 0; r < source_count; ++r) {
      auto dh = next.row(r);
      add_row_times_transposed(d_delta.row(r), w, dh);
      const auto s = pre_prev.row(r);
      for (std::size_t k = 0; k < dh.size(); ++k) {
        if (!(s[k] > 0.0)) dh[k] = 0.0;
      }
    }
    d_pre = std::move(next);
  }
  return grad;
}

std::vector<std::size_t> LocalEvaluator::active_rows() const {
  std::vector<std::size_t> out;
  for (const auto& r : rows_) out.push_back(r.size());
  return out;
}

}  // namespace poisonprobe
