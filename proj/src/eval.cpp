#include "poisonprobe/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "poisonprobe/errors.hpp"
#include "poisonprobe/text.hpp"

namespace poisonprobe {

namespace {

/// Engine stream reserved for target sampling; trial i uses stream i.
constexpr std::uint64_t kTargetStream = 0xffffffffffffffffULL;

}  // namespace

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::Random: return "random";
    case SelectionMode::Top1: return "top1";
    case SelectionMode::Top2: return "top2";
    case SelectionMode::Top3: return "top3";
    case SelectionMode::Bottom1: return "bottom1";
  }
  return "random";
}

SelectionMode parse_selection_mode(std::string_view text) {
  for (auto mode : {SelectionMode::Random, SelectionMode::Top1, SelectionMode::Top2,
                    SelectionMode::Top3, SelectionMode::Bottom1}) {
    if (text == to_string(mode)) return mode;
  }
  throw ConfigError("unknown selection mode '" + std::string(text) +
                    "' (expected random, top1, top2, top3 or bottom1)");
}

std::vector<NodeId> eligible_targets(const AttributedGraph& graph, int hops) {
  if (hops < 1) throw InvalidArgument("hop count must be at least 1");
  std::vector<NodeId> out;
  for (NodeId u = 0; u < graph.node_count(); ++u) {
    const NodeId source[] = {u};
    const auto dist = bfs_distances(graph.adjacency(), source, hops);
    if (std::find(dist.begin(), dist.end(), hops) != dist.end()) out.push_back(u);
  }
  return out;
}

namespace {

/// Draws `count` entries from `pool`, without replacement per pass over it.
std::vector<NodeId> draw_targets(std::vector<NodeId> pool, std::size_t count, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kTargetStream));
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i % pool.size();
    if (j == 0) {
      for (std::size_t k = pool.size(); k > 1; --k) std::swap(pool[k - 1], pool[uniform_index(rng, k)]);
    }
    out.push_back(pool[j]);
  }
  return out;
}

ClassId draw_target_class(Rng& rng, int classes, ClassId clean) {
  if (classes < 2) throw ConfigError("attacks need at least two classes");
  const auto k = static_cast<ClassId>(uniform_index(rng, static_cast<std::size_t>(classes - 1)));
  return k >= clean ? k + 1 : k;
}

}  // namespace

std::vector<Trial> sample_trials(const AttributedGraph& graph,
                                 const std::vector<ClassId>& clean_predictions, std::size_t count,
                                 int hops, SelectionMode mode, std::uint64_t seed) {
  if (clean_predictions.size() != graph.node_count()) {
    throw ConfigError("need one clean prediction per node");
  }
  std::vector<Trial> trials;
  if (count == 0) return trials;
  const auto eligible = eligible_targets(graph, hops);
  if (eligible.empty()) {
    throw NoCandidateError("no node has a neighbor at " + std::to_string(hops) + " hops");
  }
  const auto targets = draw_targets(eligible, count, seed);
  for (std::size_t i = 0; i < count; ++i) {
    Trial trial;
    trial.index = i;
    trial.seed = mix_seed(seed, i);
    trial.target = targets[i];
    trial.hops = hops;
    trial.mode = mode;
    trial.clean_prediction = clean_predictions[trial.target];
    trial.true_label = graph.has_labels() ? graph.labels()[trial.target] : -1;
    Rng rng(trial.seed);
    trial.target_class = draw_target_class(rng, graph.class_count(), trial.clean_prediction);
    switch (mode) {
      case SelectionMode::Random: {
        const auto ring = hop_neighbors(graph, trial.target, hops);
        trial.poison = {ring[uniform_index(rng, ring.size())]};
        break;
      }
      case SelectionMode::Top1:
      case SelectionMode::Top2:
      case SelectionMode::Top3: {
        const int k = mode == SelectionMode::Top1 ? 1 : mode == SelectionMode::Top2 ? 2 : 3;
        trial.poison = select_top_k(poisoning_efficiency(graph, trial.target, hops), k, rng);
        break;
      }
      case SelectionMode::Bottom1:
        trial.poison = {select_bottom_node(poisoning_efficiency(graph, trial.target, hops), rng)};
        break;
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const auto threads = static_cast<std::size_t>(std::max(1u, workers));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int infection_count(const AttackContext& context, const AttackResult& result) {
  if (!result.success) return 0;
  const Matrix z = forward_logits(context.model(), context.adjacency(), context.graph().features(),
                                  result.poison, result.perturbed);
  const auto& clean = context.clean_predictions();
  std::vector<bool> skip(clean.size(), false);
  skip[result.target] = true;
  for (NodeId v : result.poison) skip[v] = true;
  int flips = 0;
  for (NodeId q = 0; q < clean.size(); ++q) {
    if (!skip[q] && argmax_row(z.row(q)) != clean[q]) ++flips;
  }
  return flips;
}

std::vector<TrialOutcome> run_trials(const AttackContext& context, const std::vector<Trial>& trials,
                                     const AttackConfig& config, unsigned workers) {
  std::vector<TrialOutcome> outcomes(trials.size());
  parallel_for(trials.size(), workers, [&](std::size_t i) {
    const Trial& trial = trials[i];
    AttackConfig cfg = config;
    cfg.seed = trial.seed;
    const auto start = std::chrono::steady_clock::now();
    const AttackResult result =
        poison_probe(context, trial.target, trial.target_class, trial.poison, cfg);
    TrialOutcome& out = outcomes[i];
    out.trial = trial;
    out.beta = config.beta;
    out.success = result.success;
    out.distance = result.distance;
    out.final_margin = result.final_margin;
    out.infections = infection_count(context, result);
    out.best_lambda = result.best_lambda;
    out.lambda_trace = result.lambda_trace;
    out.aborted_steps = result.aborted_steps;
    out.max_incremental_drift = result.max_incremental_drift;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return outcomes;
}

double success_rate(const std::vector<TrialOutcome>& outcomes, double theta) {
  if (outcomes.empty()) throw InvalidArgument("success rate of an empty trial list");
  std::size_t hits = 0;
  for (const auto& o : outcomes) {
    if (o.success && o.distance < theta) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) throw InvalidArgument("bad threshold grid");
  std::vector<double> grid(points);
  const double ratio = std::log10(hi / lo);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo * std::pow(10.0, ratio * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_thresholds() { return log_grid(1e-2, 1e3, 51); }

SuccessCurve success_curve(const std::vector<TrialOutcome>& outcomes,
                           const std::vector<double>& thresholds) {
  SuccessCurve curve;
  curve.thresholds = thresholds;
  std::sort(curve.thresholds.begin(), curve.thresholds.end());
  for (double theta : curve.thresholds) curve.values.push_back(success_rate(outcomes, theta));
  return curve;
}

std::optional<double> spearman_rcc(const std::vector<double>& rank_a,
                                   const std::vector<double>& rank_b) {
  if (rank_a.size() != rank_b.size()) throw InvalidArgument("rank vectors differ in length");
  const auto k = static_cast<double>(rank_a.size());
  if (rank_a.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < rank_a.size(); ++i) {
    const double d = rank_a[i] - rank_b[i];
    sum += d * d;
  }
  return 1.0 - 6.0 * sum / (k * (k * k - 1.0));
}

std::optional<std::size_t> best_candidate_rank(const CandidateSweep& sweep) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < sweep.distances.size(); ++i) {
    if (!sweep.distances[i]) continue;
    if (!best || *sweep.distances[i] < *sweep.distances[*best - 1]) best = i + 1;
  }
  return best;
}

std::vector<double> perturbation_ranks(const CandidateSweep& sweep) {
  std::vector<std::size_t> order(sweep.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = sweep.distances[a];
    const auto& db = sweep.distances[b];
    if (da.has_value() != db.has_value()) return da.has_value();
    if (da && *da != *db) return *da < *db;
    return sweep.candidates[a].node < sweep.candidates[b].node;
  });
  std::vector<double> ranks(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<double>(pos + 1);
  return ranks;
}

RecallReport recall_at_k(const std::vector<CandidateSweep>& sweeps, std::size_t k_max) {
  RecallReport report;
  std::vector<std::size_t> best;
  for (const auto& s : sweeps) {
    if (const auto rank = best_candidate_rank(s)) {
      best.push_back(*rank);
    } else {
      ++report.excluded;
    }
  }
  report.targets_used = best.size();
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto hits = static_cast<double>(
        std::count_if(best.begin(), best.end(), [k](std::size_t r) { return r <= k; }));
    report.recall.push_back(best.empty() ? 0.0 : hits / static_cast<double>(best.size()));
  }
  return report;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  double var = 0.0;
  for (double v : sorted) var += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(var / static_cast<double>(sorted.size()));
  s.zeros = static_cast<double>(std::count(sorted.begin(), sorted.end(), 0.0)) /
            static_cast<double>(sorted.size());
  return s;
}

RankCorrelationReport rank_correlation(const std::vector<CandidateSweep>& sweeps) {
  RankCorrelationReport report;
  for (const auto& s : sweeps) {
    if (s.candidates.size() < 2 || !best_candidate_rank(s)) {
      ++report.skipped;
      continue;
    }
    std::vector<double> efficiency(s.candidates.size());
    std::iota(efficiency.begin(), efficiency.end(), 1.0);
    report.per_target.push_back(*spearman_rcc(efficiency, perturbation_ranks(s)));
  }
  const Summary summary = summarize(report.per_target);
  report.mean = summary.mean;
  report.std_dev = summary.std_dev;
  return report;
}

std::vector<CandidateSweep> run_candidate_sweeps(const AttackContext& context, std::size_t targets,
                                                 int hops, std::size_t min_candidates,
                                                 std::uint64_t seed, const AttackConfig& config,
                                                 unsigned workers) {
  const AttributedGraph& graph = context.graph();
  std::vector<CandidateSweep> sweeps;
  if (targets == 0) return sweeps;

  std::vector<NodeId> pool;
  std::vector<EfficiencyTable> tables(graph.node_count());
  for (NodeId u : eligible_targets(graph, hops)) {
    EfficiencyTable table = poisoning_efficiency(graph, u, hops);
    std::vector<double> scores;
    for (const auto& c : table.candidates) scores.push_back(c.score);
    std::sort(scores.begin(), scores.end());
    std::size_t classes = scores.empty() ? 0 : 1;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (!same_score(scores[i - 1], scores[i])) ++classes;
    }
    if (classes >= std::max<std::size_t>(min_candidates, 1)) {
      pool.push_back(u);
      tables[u] = std::move(table);
    }
  }
  if (pool.empty()) {
    throw NoCandidateError("no target has " + std::to_string(min_candidates) +
                           " distinct-efficiency candidates at " + std::to_string(hops) + " hops");
  }
  const auto chosen = draw_targets(pool, std::min(targets, pool.size()), seed);

  struct Job {
    std::size_t sweep;
    std::size_t candidate;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    CandidateSweep sweep;
    sweep.target = chosen[i];
    Rng rng(mix_seed(seed, i));
    sweep.target_class =
        draw_target_class(rng, graph.class_count(), context.clean_predictions()[sweep.target]);
    sweep.candidates = distinct_efficiency_candidates(tables[sweep.target], rng);
    sweep.distances.assign(sweep.candidates.size(), std::nullopt);
    for (std::size_t c = 0; c < sweep.candidates.size(); ++c) jobs.push_back({i, c});
    sweeps.push_back(std::move(sweep));
  }

  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    CandidateSweep& sweep = sweeps[jobs[j].sweep];
    AttackConfig cfg = config;
    cfg.seed = mix_seed(seed, jobs[j].sweep);
    const auto result = poison_probe(context, sweep.target, sweep.target_class,
                                     {sweep.candidates[jobs[j].candidate].node}, cfg);
    if (result.success) sweep.distances[jobs[j].candidate] = result.distance;
  });
  return sweeps;
}

namespace {

std::string join_ids(const std::vector<NodeId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) s += ';';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) s += ';';
    s += format_double(values[i]);
  }
  return s;
}

}  // namespace

void write_trials_header(std::ostream& out) {
  out << "dataset,architecture,trial,seed,mode,hops,beta,target,target_class,clean_prediction,"
         "true_label,poison,success,distance,final_margin,infections,best_lambda,lambda_trace,"
         "aborted_steps\n";
}

void write_trials_csv(std::ostream& out, const RunLabel& label,
                      const std::vector<TrialOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    const Trial& t = o.trial;
    out << label.dataset << ',' << label.architecture << ',' << t.index << ',' << t.seed << ','
        << to_string(t.mode) << ',' << t.hops << ',' << format_double(o.beta) << ',' << t.target
        << ',' << t.target_class << ',' << t.clean_prediction << ',' << t.true_label << ','
        << join_ids(t.poison) << ',' << (o.success ? 1 : 0) << ',' << format_double(o.distance)
        << ',' << format_double(o.final_margin) << ',' << o.infections << ','
        << format_double(o.best_lambda) << ',' << join_doubles(o.lambda_trace) << ','
        << o.aborted_steps << '\n';
  }
}

void write_curve_header(std::ostream& out) {
  out << "dataset,architecture,mode,hops,beta,theta,success\n";
}

void write_curve_csv(std::ostream& out, const RunLabel& label, SelectionMode mode, int hops,
                     double beta, const SuccessCurve& curve) {
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << label.dataset << ',' << label.architecture << ',' << to_string(mode) << ',' << hops
        << ',' << format_double(beta) << ',' << format_double(curve.thresholds[i]) << ','
        << format_double(curve.values[i]) << '\n';
  }
}

void write_aggregate_header(std::ostream& out) {
  out << "dataset,architecture,mode,hops,beta,trials,successes,success_rate,mean_l2,"
         "mean_infections\n";
}

void write_aggregate_row(std::ostream& out, const RunLabel& label, SelectionMode mode, int hops,
                         double beta, const std::vector<TrialOutcome>& outcomes) {
  std::vector<double> distances;
  std::vector<double> infections;
  for (const auto& o : outcomes) {
    if (!o.success) continue;
    distances.push_back(o.distance);
    infections.push_back(o.infections);
  }
  out << label.dataset << ',' << label.architecture << ',' << to_string(mode) << ',' << hops << ','
      << format_double(beta) << ',' << outcomes.size() << ',' << distances.size() << ',';
  if (!outcomes.empty()) out << format_double(success_rate(outcomes, INFINITY));
  out << ',';
  if (!distances.empty()) out << format_double(summarize(distances).mean);
  out << ',';
  if (!infections.empty()) out << format_double(summarize(infections).mean);
  out << '\n';
}

void write_infection_header(std::ostream& out) {
  out << "dataset,architecture,hops,beta,trials,successes,median,mean,std,zeros\n";
}

void write_infection_row(std::ostream& out, const RunLabel& label, int hops, double beta,
                         const std::vector<TrialOutcome>& outcomes) {
  std::vector<double> infections;
  std::size_t successes = 0;
  for (const auto& o : outcomes) {
    infections.push_back(o.infections);
    if (o.success) ++successes;
  }
  out << label.dataset << ',' << label.architecture << ',' << hops << ',' << format_double(beta)
      << ',' << outcomes.size() << ',' << successes << ',';
  if (!infections.empty()) {
    const Summary s = summarize(infections);
    out << format_double(s.median) << ',' << format_double(s.mean) << ','
        << format_double(s.std_dev) << ',' << format_double(s.zeros);
  } else {
    out << ",,,";
  }
  out << '\n';
}

void write_sweep_header(std::ostream& out) {
  out << "target,target_class,kappa,best_rank,rcc,candidates,distances\n";
}

void write_sweep_rows(std::ostream& out, const std::vector<CandidateSweep>& sweeps) {
  for (const auto& s : sweeps) {
    out << s.target << ',' << s.target_class << ',' << s.candidates.size() << ',';
    const auto best = best_candidate_rank(s);
    if (best) out << *best;
    out << ',';
    if (best && s.candidates.size() >= 2) {
      std::vector<double> efficiency(s.candidates.size());
      std::iota(efficiency.begin(), efficiency.end(), 1.0);
      out << format_double(*spearman_rcc(efficiency, perturbation_ranks(s)));
    }
    out << ',';
    std::vector<NodeId> nodes;
    for (const auto& c : s.candidates) nodes.push_back(c.node);
    out << join_ids(nodes) << ',';
    for (std::size_t i = 0; i < s.distances.size(); ++i) {
      if (i > 0) out << ';';
      out << (s.distances[i] ? format_double(*s.distances[i]) : "fail");
    }
    out << '\n';
  }
}

void write_ranking_header(std::ostream& out) {
  out << "dataset,architecture,hops,metric,k,value\n";
}

void write_ranking_rows(std::ostream& out, const RunLabel& label, int hops,
                        const RecallReport& recall, const RankCorrelationReport& rcc) {
  auto row = [&](const char* metric, const std::string& k, const std::string& value) {
    out << label.dataset << ',' << label.architecture << ',' << hops << ',' << metric << ',' << k
        << ',' << value << '\n';
  };
  for (std::size_t k = 0; k < recall.recall.size(); ++k) {
    row("recall", std::to_string(k + 1), recall.targets_used > 0 ? format_double(recall.recall[k]) : "");
  }
  row("targets_used", "", std::to_string(recall.targets_used));
  row("targets_excluded", "", std::to_string(recall.excluded));
  const bool any = !rcc.per_target.empty();
  row("rcc_mean", "", any ? format_double(rcc.mean) : "");
  row("rcc_std", "", any ? format_double(rcc.std_dev) : "");
  row("rcc_targets", "", std::to_string(rcc.per_target.size()));
}

}  // namespace poisonprobe
