#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poisonprobe/attack.hpp"
#include "poisonprobe/selection.hpp"

namespace poisonprobe {

enum class SelectionMode { Random, Top1, Top2, Top3, Bottom1 };

std::string_view to_string(SelectionMode mode);
/// "random", "top1", "top2", "top3", "bottom1". Throws ConfigError otherwise.
SelectionMode parse_selection_mode(std::string_view text);

/// One (target, target class, poison set) triple.
struct Trial {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  NodeId target = 0;
  ClassId target_class = 0;
  ClassId clean_prediction = 0;
  /// Ground-truth label, -1 when the graph is unlabeled.
  ClassId true_label = -1;
  int hops = 0;
  SelectionMode mode = SelectionMode::Random;
  std::vector<NodeId> poison;

  friend bool operator==(const Trial&, const Trial&) = default;
};

/// Nodes with at least one neighbor at exactly `hops` hops.
std::vector<NodeId> eligible_targets(const AttributedGraph& graph, int hops);

/// Targets are drawn uniformly without replacement from the eligible nodes
/// (with replacement once they run out). Trial i then uses its own engine
/// seeded with mix_seed(seed, i) to draw a target class other than the clean
/// prediction and the poison set. The target draw does not depend on the mode,
/// so different modes with the same seed attack the same (target, class)
/// pairs. Throws NoCandidateError when no node qualifies.
std::vector<Trial> sample_trials(const AttributedGraph& graph,
                                 const std::vector<ClassId>& clean_predictions, std::size_t count,
                                 int hops, SelectionMode mode, std::uint64_t seed);

/// Calls fn(i) for i in [0, count) on `workers` threads. Results must be
/// stored by index so the thread count never changes them. The first
/// exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

struct TrialOutcome {
  Trial trial;
  double beta = 0.0;
  bool success = false;
  /// L2 distance of the returned perturbation; 0 on failure.
  double distance = 0.0;
  double final_margin = 0.0;
  int infections = 0;
  double best_lambda = 0.0;
  std::vector<double> lambda_trace;
  int aborted_steps = 0;
  double max_incremental_drift = 0.0;
  /// Wall time of the attack; kept out of every output file.
  double seconds = 0.0;
};

/// Prediction flips outside {target} and the poison set, by a fresh dense
/// forward pass with the perturbed rows.
int infection_count(const AttackContext& context, const AttackResult& result);

std::vector<TrialOutcome> run_trials(const AttackContext& context, const std::vector<Trial>& trials,
                                     const AttackConfig& config, unsigned workers);

/// Successful trials with distance < theta over all trials. Throws
/// InvalidArgument on an empty list.
double success_rate(const std::vector<TrialOutcome>& outcomes, double theta);

struct SuccessCurve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

/// `points` log-spaced values from `lo` to `hi` inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);
/// Default grid: 51 points from 1e-2 to 1e3.
std::vector<double> default_thresholds();
SuccessCurve success_curve(const std::vector<TrialOutcome>& outcomes,
                           const std::vector<double>& thresholds);

/// Standard Spearman rho = 1 - 6 sum d^2 / (k (k^2 - 1)) for two rankings
/// without ties. nullopt when k < 2. Throws InvalidArgument on a length
/// mismatch.
std::optional<double> spearman_rcc(const std::vector<double>& rank_a,
                                   const std::vector<double>& rank_b);

/// Every candidate of one target, in descending efficiency, with the attack
/// distance each achieved (nullopt when the attack failed).
struct CandidateSweep {
  NodeId target = 0;
  ClassId target_class = 0;
  std::vector<Candidate> candidates;
  std::vector<std::optional<double>> distances;
};

/// 1-based efficiency rank of the candidate with the smallest successful
/// perturbation (earlier candidates win exact ties); nullopt when all failed.
std::optional<std::size_t> best_candidate_rank(const CandidateSweep& sweep);

/// Perturbation-size ranks (1 = smallest), failures last, remaining ties by
/// node id. Parallel to sweep.candidates.
std::vector<double> perturbation_ranks(const CandidateSweep& sweep);

struct RecallReport {
  /// recall[k - 1] = recall@k for k = 1..k_max.
  std::vector<double> recall;
  std::size_t targets_used = 0;
  /// Targets where every attack failed.
  std::size_t excluded = 0;
};

RecallReport recall_at_k(const std::vector<CandidateSweep>& sweeps, std::size_t k_max);

struct RankCorrelationReport {
  std::vector<double> per_target;
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t skipped = 0;
};

/// Spearman rcc between efficiency rank and perturbation rank for each sweep
/// with at least two candidates.
RankCorrelationReport rank_correlation(const std::vector<CandidateSweep>& sweeps);

/// Targets with at least `min_candidates` distinct-efficiency candidates at
/// `hops`, sampled like sample_trials, each attacked once per candidate.
std::vector<CandidateSweep> run_candidate_sweeps(const AttackContext& context, std::size_t targets,
                                                 int hops, std::size_t min_candidates,
                                                 std::uint64_t seed, const AttackConfig& config,
                                                 unsigned workers);

struct Summary {
  std::size_t count = 0;
  double median = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  /// Fraction of exact zeros.
  double zeros = 0.0;
};
Summary summarize(const std::vector<double>& values);

/// Everything identifying a run in its output files.
struct RunLabel {
  std::string dataset;
  std::string architecture;
};

/// CSV writers. Doubles use the shortest round-trip representation and
/// undefined statistics are written as empty fields.
void write_trials_csv(std::ostream& out, const RunLabel& label,
                      const std::vector<TrialOutcome>& outcomes);
void write_trials_header(std::ostream& out);
void write_curve_csv(std::ostream& out, const RunLabel& label, SelectionMode mode, int hops,
                     double beta, const SuccessCurve& curve);
void write_curve_header(std::ostream& out);
/// dataset,architecture,mode,hops,beta,trials,successes,success_rate,mean_l2,mean_infections
void write_aggregate_header(std::ostream& out);
void write_aggregate_row(std::ostream& out, const RunLabel& label, SelectionMode mode, int hops,
                         double beta, const std::vector<TrialOutcome>& outcomes);
/// dataset,architecture,hops,beta,trials,successes,median,mean,std,zeros
void write_infection_header(std::ostream& out);
void write_infection_row(std::ostream& out, const RunLabel& label, int hops, double beta,
                         const std::vector<TrialOutcome>& outcomes);
/// target,target_class,kappa,best_rank,rcc,candidates,distances
void write_sweep_header(std::ostream& out);
void write_sweep_rows(std::ostream& out, const std::vector<CandidateSweep>& sweeps);
/// dataset,architecture,hops,metric,k,value
void write_ranking_header(std::ostream& out);
void write_ranking_rows(std::ostream& out, const RunLabel& label, int hops,
                        const RecallReport& recall, const RankCorrelationReport& rcc);

}  // namespace poisonprobe
