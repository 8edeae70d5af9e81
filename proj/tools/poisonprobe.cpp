// Command-line front end: train, attack, select, evaluate, sweep, synth.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "poisonprobe/attack.hpp"
#include "poisonprobe/dataset.hpp"
#include "poisonprobe/errors.hpp"
#include "poisonprobe/eval.hpp"
#include "poisonprobe/gcn.hpp"
#include "poisonprobe/selection.hpp"
#include "poisonprobe/splits.hpp"
#include "poisonprobe/synthetic.hpp"
#include "poisonprobe/text.hpp"
#include "poisonprobe/weights_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace poisonprobe;

namespace {

/// Bad flag combinations and values; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool f64_strict = false;
  std::string data_dir;
};

struct AttackFlags {
  int max_iter = 1000;
  int search_steps = 9;
  double learning_rate = 0.01;
  double lambda_init = 1.0;
  std::string penalty_mode = "as-written";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iter, "Adam iterations per lambda step")->capture_default_str();
    cmd->add_option("--search-steps", search_steps, "binary-search steps on lambda")->capture_default_str();
    cmd->add_option("--attack-lr", learning_rate, "Adam step size of the attack")->capture_default_str();
    cmd->add_option("--lambda-init", lambda_init, "initial hinge weight")->capture_default_str();
    cmd->add_option("--penalty-mode", penalty_mode, "infection margin: as-written or vs-clean")
        ->check(CLI::IsMember({"as-written", "vs-clean"}))
        ->capture_default_str();
  }

  [[nodiscard]] AttackConfig config(const Globals& g, double beta) const {
    AttackConfig c;
    c.max_iter = max_iter;
    c.max_search_steps = search_steps;
    c.learning_rate = learning_rate;
    c.lambda_init = lambda_init;
    c.beta = beta;
    c.penalty_mode =
        penalty_mode == "vs-clean" ? PenaltyMarginMode::VsCleanLabel : PenaltyMarginMode::AsWritten;
    c.seed = g.seed;
    c.verify_every = g.f64_strict ? 50 : 0;
    return c;
  }

  [[nodiscard]] json describe(double beta) const {
    return json{{"max_iter", max_iter},         {"search_steps", search_steps},
                {"learning_rate", learning_rate}, {"lambda_init", lambda_init},
                {"beta", beta},                   {"penalty_mode", penalty_mode}};
  }
};

/// Drift above this between the incremental and dense logits is an error
/// under --f64-strict.
constexpr double kStrictDrift = 1e-9;

Dataset load(const std::string& name, const Globals& g) {
  const DatasetSpec spec = DatasetSpec::resolve(name, g.data_dir);
  if (!fs::exists(spec.node_file) || !fs::exists(spec.edge_file)) {
    throw UsageError("dataset '" + name + "' not found (looked for " + spec.node_file.string() +
                     " and " + spec.edge_file.string() + "); set --data-dir or " +
                     kDataRootVariable + ", or pass a path prefix");
  }
  Dataset data = load_dataset(spec);
  for (const auto& w : data.report.warnings) std::cerr << "warning: " << w << '\n';
  if (spec.expected) {
    for (const auto& issue : validate_stats(data.report, *spec.expected)) {
      if (issue.fatal) throw ParseError("dataset '" + name + "' does not match: " + issue.message);
    }
  }
  return data;
}

WeightFile load_model(const std::string& path, const std::string& dataset) {
  if (!fs::exists(path)) {
    throw UsageError("weight file '" + path + "' not found; create it with `poisonprobe train --dataset " +
                     dataset + " --out " + path + "`");
  }
  return load_weights(path);
}

void check_pairing(const WeightFile& weights, const Dataset& data, const std::string& path) {
  if (!weights.dataset_hash.empty() && weights.dataset_hash != data.hash) {
    throw UsageError("weights '" + path + "' were trained on different dataset files (hash " +
                     weights.dataset_hash + ", loaded " + data.hash + "); retrain with `poisonprobe train`");
  }
  if (weights.model.input_dim() != data.graph.feature_dim() ||
      weights.model.class_count != data.graph.class_count()) {
    throw UsageError("weights '" + path + "' do not fit the dataset dimensions");
  }
}

NodeId resolve_node(const Dataset& data, const std::string& id) {
  for (NodeId i = 0; i < data.node_ids.size(); ++i) {
    if (data.node_ids[i] == id) return i;
  }
  throw UsageError("unknown node id '" + id + "'");
}

ClassId resolve_class(const WeightFile& weights, const std::string& text) {
  for (std::size_t c = 0; c < weights.class_names.size(); ++c) {
    if (weights.class_names[c] == text) return static_cast<ClassId>(c);
  }
  try {
    std::size_t used = 0;
    const int c = std::stoi(text, &used);
    if (used == text.size() && c >= 0 && c < weights.model.class_count) return c;
  } catch (const std::exception&) {
  }
  throw UsageError("unknown class '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  for (auto part : split_on(text, ',')) {
    try {
      std::size_t used = 0;
      const std::string s(part);
      out.push_back(std::stoi(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

void emit(const json& line) { std::cout << line.dump() << '\n'; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string dataset;
  std::string arch = "gcn2";
  std::string out;
  std::string split;
  int epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  double labeled_fraction = 0.2;
};

void run_train(const TrainArgs& a, const Globals& g) {
  const Dataset data = load(a.dataset, g);
  const fs::path split_path = a.split.empty() ? fs::path(a.out + ".split") : fs::path(a.split);
  Split split;
  if (!a.split.empty() && fs::exists(split_path)) {
    split = load_split(split_path);
    if (split.node_count != data.graph.node_count()) {
      throw UsageError("split file '" + a.split + "' is for a graph with " +
                       std::to_string(split.node_count) + " nodes");
    }
  } else {
    split = make_splits(data.graph.node_count(), a.labeled_fraction, g.seed);
    save_split(split, split_path);
  }

  TrainConfig cfg;
  cfg.max_epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.weight_decay = a.weight_decay;
  cfg.dropout_rate = a.dropout;
  cfg.seed = g.seed;
  GcnModel model = GcnModel::initialize(parse_architecture(a.arch), data.graph.feature_dim(),
                                        data.graph.class_count(), g.seed);
  const TrainReport report = train(model, data.graph, split, cfg);

  WeightFile file{model, data.graph.class_names(), data.name, data.hash};
  save_weights(file, a.out);
  emit(json{{"command", "train"},
            {"dataset", data.name},
            {"architecture", std::string(to_string(model.architecture))},
            {"seed", g.seed},
            {"best_epoch", report.best_epoch},
            {"train_accuracy", report.train_accuracy},
            {"validation_accuracy", report.validation_accuracy},
            {"unlabeled_accuracy", report.unlabeled_accuracy},
            {"weights", a.out},
            {"weights_hash", file_hash(a.out)},
            {"split", split_path.string()}});
}

// --------------------------------------------------------------- attack

struct AttackArgs {
  std::string dataset;
  std::string weights;
  std::string target;
  std::string target_class;
  std::string poison;
  double beta = 0.0;
  std::string out;
  AttackFlags flags;
};

void run_attack(const AttackArgs& a, const Globals& g) {
  const Dataset data = load(a.dataset, g);
  const WeightFile weights = load_model(a.weights, a.dataset);
  check_pairing(weights, data, a.weights);
  const NodeId target = resolve_node(data, a.target);
  const ClassId t = resolve_class(weights, a.target_class);

  std::vector<NodeId> poison;
  int hops = 0;
  if (a.poison.rfind("auto:", 0) == 0) {
    const auto fields = split_on(a.poison.substr(5), ':');
    if (fields.empty() || fields.size() > 2) throw UsageError("--poison auto expects auto:m or auto:m:k");
    hops = parse_int_list(std::string(fields[0]), "hop")[0];
    const int k = fields.size() == 2 ? parse_int_list(std::string(fields[1]), "k")[0] : 1;
    if (hops < 1 || k < 1) throw UsageError("--poison auto:m:k needs m >= 1 and k >= 1");
    Rng rng(mix_seed(g.seed, target));
    const auto table = poisoning_efficiency(data.graph, target, hops);
    if (table.empty()) {
      throw UsageError("node '" + a.target + "' has no neighbors at " + std::to_string(hops) + " hops");
    }
    poison = select_top_k(table, k, rng);
  } else {
    for (auto id : split_on(a.poison, ',')) poison.push_back(resolve_node(data, std::string(id)));
    const auto dist = bfs_distances(data.graph.adjacency(), poison);
    hops = dist[target];
  }

  const AttackContext context(weights.model, data.graph);
  const AttackConfig cfg = a.flags.config(g, a.beta);
  const AttackResult result = poison_probe(context, target, t, poison, cfg);
  if (g.f64_strict && result.max_incremental_drift > kStrictDrift) {
    throw ConfigError("incremental logits drifted by " + format_double(result.max_incremental_drift) +
                      " from the dense forward pass");
  }
  const int infections = infection_count(context, result);

  if (!a.out.empty()) {
    TrialOutcome o;
    o.trial.seed = g.seed;
    o.trial.target = target;
    o.trial.target_class = t;
    o.trial.clean_prediction = context.clean_predictions()[target];
    o.trial.true_label = data.graph.labels()[target];
    o.trial.hops = hops;
    o.trial.poison = poison;
    o.beta = a.beta;
    o.success = result.success;
    o.distance = result.distance;
    o.final_margin = result.final_margin;
    o.infections = infections;
    o.best_lambda = result.best_lambda;
    o.lambda_trace = result.lambda_trace;
    o.aborted_steps = result.aborted_steps;
    auto out = open_out(a.out);
    write_trials_header(out);
    write_trials_csv(out, {data.name, std::string(to_string(weights.model.architecture))}, {o});
  }

  std::vector<std::string> poison_ids;
  for (NodeId v : poison) poison_ids.push_back(data.node_ids[v]);
  json line{{"command", "attack"},
            {"target", a.target},
            {"target_class", a.target_class},
            {"clean_class", weights.class_names.empty()
                                ? std::to_string(context.clean_predictions()[target])
                                : weights.class_names[static_cast<std::size_t>(
                                      context.clean_predictions()[target])]},
            {"poison", poison_ids},
            {"hops", hops},
            {"beta", a.beta},
            {"success", result.success},
            {"distance", result.distance},
            {"final_margin", result.final_margin},
            {"best_lambda", result.best_lambda},
            {"infections", infections},
            {"aborted_steps", result.aborted_steps}};
  if (g.f64_strict) line["max_incremental_drift"] = result.max_incremental_drift;
  emit(line);
}

// --------------------------------------------------------------- select

struct SelectArgs {
  std::string dataset;
  std::string weights;
  std::string target;
  int hops = 2;
  int top = 0;
  std::string out;
};

void run_select(const SelectArgs& a, const Globals& g) {
  const Dataset data = load(a.dataset, g);
  if (!a.weights.empty()) check_pairing(load_model(a.weights, a.dataset), data, a.weights);
  const NodeId target = resolve_node(data, a.target);
  if (a.hops < 1) throw UsageError("--hops must be at least 1");
  const auto table = poisoning_efficiency(data.graph, target, a.hops);
  Rng rng(mix_seed(g.seed, target));
  const int k = a.top > 0 ? a.top : static_cast<int>(table.candidates.size());
  const auto order = table.empty() ? std::vector<NodeId>{} : select_top_k(table, k, rng);

  std::ostringstream csv;
  csv << "node,hops,score,rank\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    csv << data.node_ids[order[r]] << ',' << a.hops << ',' << format_double(*table.score(order[r]))
        << ',' << r + 1 << '\n';
  }
  if (a.out.empty()) {
    std::cout << csv.str();
    return;
  }
  auto out = open_out(a.out);
  out << csv.str();
  emit(json{{"command", "select"},
            {"target", a.target},
            {"hops", a.hops},
            {"candidates", table.candidates.size()},
            {"rows", order.size()},
            {"out", a.out}});
}

// ------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string dataset;
  std::string weights;
  int table = 3;
  std::size_t trials = 200;
  std::string hops;
  std::string modes = "top1,top2,top3,bottom1";
  double beta = 0.01;
  std::size_t min_candidates = 2;
  std::size_t k_max = 5;
  std::string out_dir;
  AttackFlags flags;
};

/// Runs one table and returns the JSON summary. Writes into `out_dir` when it
/// is non-empty, otherwise prints the aggregate CSV on stdout.
json run_evaluate(const EvalArgs& a, const Globals& g) {
  if (a.table < 3 || a.table > 6) throw UsageError("--table must be 3, 4, 5 or 6");
  const Dataset data = load(a.dataset, g);
  const WeightFile weights = load_model(a.weights, a.dataset);
  check_pairing(weights, data, a.weights);
  const AttackContext context(weights.model, data.graph);
  const RunLabel label{data.name, std::string(to_string(weights.model.architecture))};

  std::vector<int> hops;
  if (!a.hops.empty()) {
    hops = parse_int_list(a.hops, "hop");
  } else if (a.table == 3) {
    hops = {1, 2};
  } else if (a.table == 6) {
    hops = {1, 2};
  } else {
    hops = {2};
  }
  for (int h : hops) {
    if (h < 1) throw UsageError("hop counts must be at least 1");
  }
  if ((a.table == 4 || a.table == 5) && hops.size() != 1) {
    throw UsageError("tables 4 and 5 take a single --hops value");
  }

  std::ostringstream trials_csv, curves_csv, aggregate_csv, sweeps_csv;
  std::vector<std::string> files;
  json summary{{"command", "evaluate"}, {"table", a.table}, {"dataset", data.name},
               {"architecture", label.architecture}, {"trials", a.trials}, {"hops", hops}};
  json rates = json::array();
  bool drift_failed = false;
  double worst_drift = 0.0;
  auto note_drift = [&](const std::vector<TrialOutcome>& outcomes) {
    for (const auto& o : outcomes) worst_drift = std::max(worst_drift, o.max_incremental_drift);
    if (g.f64_strict && worst_drift > kStrictDrift) drift_failed = true;
  };

  if (a.table == 3 || a.table == 4) {
    write_trials_header(trials_csv);
    write_curve_header(curves_csv);
    write_aggregate_header(aggregate_csv);
    std::vector<std::pair<SelectionMode, int>> settings;
    if (a.table == 3) {
      for (int h : hops) settings.emplace_back(SelectionMode::Random, h);
    } else {
      for (auto m : split_on(a.modes, ',')) settings.emplace_back(parse_selection_mode(m), hops[0]);
    }
    for (const auto& [mode, h] : settings) {
      if (a.trials == 0) continue;
      const auto trials = sample_trials(data.graph, context.clean_predictions(), a.trials, h, mode, g.seed);
      const auto outcomes = run_trials(context, trials, a.flags.config(g, 0.0), g.workers);
      note_drift(outcomes);
      write_trials_csv(trials_csv, label, outcomes);
      write_curve_csv(curves_csv, label, mode, h, 0.0, success_curve(outcomes, default_thresholds()));
      write_aggregate_row(aggregate_csv, label, mode, h, 0.0, outcomes);
      rates.push_back(json{{"mode", std::string(to_string(mode))},
                           {"hops", h},
                           {"success_rate", success_rate(outcomes, INFINITY)}});
    }
    summary["success"] = rates;
    files = {"trials.csv", "curves.csv", "aggregate.csv"};
  } else if (a.table == 5) {
    write_sweep_header(sweeps_csv);
    write_ranking_header(aggregate_csv);
    if (a.trials > 0) {
      const auto sweeps = run_candidate_sweeps(context, a.trials, hops[0], a.min_candidates, g.seed,
                                               a.flags.config(g, 0.0), g.workers);
      const auto recall = recall_at_k(sweeps, a.k_max);
      const auto rcc = rank_correlation(sweeps);
      write_sweep_rows(sweeps_csv, sweeps);
      write_ranking_rows(aggregate_csv, label, hops[0], recall, rcc);
      summary["recall"] = recall.recall;
      summary["rcc_mean"] = rcc.mean;
      summary["targets_excluded"] = recall.excluded;
    }
    files = {"sweeps.csv", "aggregate.csv"};
  } else {
    write_trials_header(trials_csv);
    write_infection_header(aggregate_csv);
    for (int h : hops) {
      if (a.trials == 0) continue;
      const auto trials = sample_trials(data.graph, context.clean_predictions(), a.trials, h,
                                        SelectionMode::Random, g.seed);
      for (double beta : {0.0, a.beta}) {
        const auto outcomes = run_trials(context, trials, a.flags.config(g, beta), g.workers);
        note_drift(outcomes);
        write_trials_csv(trials_csv, label, outcomes);
        write_infection_row(aggregate_csv, label, h, beta, outcomes);
        std::vector<double> counts;
        for (const auto& o : outcomes) counts.push_back(o.infections);
        rates.push_back(json{{"hops", h}, {"beta", beta}, {"mean_infections", summarize(counts).mean}});
      }
    }
    summary["infections"] = rates;
    files = {"trials.csv", "aggregate.csv"};
  }
  if (g.f64_strict) summary["max_incremental_drift"] = worst_drift;
  if (drift_failed) {
    throw ConfigError("incremental logits drifted by " + format_double(worst_drift) +
                      " from the dense forward pass");
  }

  if (a.out_dir.empty()) {
    std::cout << aggregate_csv.str();
    return summary;
  }
  const fs::path dir(a.out_dir);
  for (const auto& name : files) {
    auto out = open_out(dir / name);
    if (name == "trials.csv") out << trials_csv.str();
    if (name == "curves.csv") out << curves_csv.str();
    if (name == "aggregate.csv") out << aggregate_csv.str();
    if (name == "sweeps.csv") out << sweeps_csv.str();
  }
  json manifest{{"command", "evaluate"},
                {"table", a.table},
                {"dataset", data.name},
                {"dataset_hash", data.hash},
                {"weights", a.weights},
                {"model_hash", file_hash(a.weights)},
                {"architecture", label.architecture},
                {"seed", g.seed},
                {"trials", a.trials},
                {"hops", hops},
                {"attack", a.flags.describe(a.table == 6 ? a.beta : 0.0)},
                {"outputs", files}};
  if (a.table == 4) manifest["modes"] = a.modes;
  if (a.table == 5) {
    manifest["min_candidates"] = a.min_candidates;
    manifest["k_max"] = a.k_max;
  }
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  summary["out_dir"] = a.out_dir;
  return summary;
}

// ---------------------------------------------------------------- sweep

/// Config file: {"out_dir": "...", "runs": [{"name", "table", "dataset",
/// "weights", "trials", "hops", "modes", "beta", "min_candidates", "k_max",
/// "max_iter", "search_steps", "seed"}, ...]}. Each run writes to
/// out_dir/<name>.
void run_sweep(const std::string& config_path, const Globals& g) {
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open sweep config '" + config_path + "'");
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(config_path + ": " + e.what());
  }
  if (!config.contains("runs") || !config["runs"].is_array()) {
    throw UsageError(config_path + ": expected a \"runs\" array");
  }
  const std::string root = config.value("out_dir", std::string("sweep"));
  std::size_t index = 0;
  for (const auto& run : config["runs"]) {
    EvalArgs a;
    Globals gg = g;
    try {
      a.table = run.at("table").get<int>();
      a.dataset = run.at("dataset").get<std::string>();
      a.weights = run.at("weights").get<std::string>();
      a.trials = run.value("trials", a.trials);
      if (run.contains("hops")) {
        const auto& h = run["hops"];
        a.hops = h.is_array() ? [&] {
          std::string s;
          for (const auto& x : h) s += (s.empty() ? "" : ",") + std::to_string(x.get<int>());
          return s;
        }()
                              : std::to_string(h.get<int>());
      }
      a.modes = run.value("modes", a.modes);
      a.beta = run.value("beta", a.beta);
      a.min_candidates = run.value("min_candidates", a.min_candidates);
      a.k_max = run.value("k_max", a.k_max);
      a.flags.max_iter = run.value("max_iter", a.flags.max_iter);
      a.flags.search_steps = run.value("search_steps", a.flags.search_steps);
      gg.seed = run.value("seed", g.seed);
      a.out_dir = (fs::path(root) / run.value("name", "run" + std::to_string(index))).string();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(config_path + ": run " + std::to_string(index) + ": " + e.what());
    }
    json line = run_evaluate(a, gg);
    line["command"] = "sweep";
    line["run"] = index;
    emit(line);
    ++index;
  }
}

// ---------------------------------------------------------------- synth

void run_synth(const SyntheticSpec& spec, const std::string& prefix) {
  const AttributedGraph graph = generate_synthetic(spec);
  save_dataset(graph, prefix + ".content", prefix + ".cites");
  emit(json{{"command", "synth"},
            {"nodes", graph.node_count()},
            {"undirected_edges", graph.adjacency().entry_count() / 2},
            {"features", graph.feature_dim()},
            {"classes", graph.class_count()},
            {"seed", spec.seed},
            {"prefix", prefix}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PoisonProbe: indirect single-node feature attacks on graph convolutional networks"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  if (const char* env = std::getenv(kDataRootVariable)) g.data_dir = env;
  if (g.data_dir.empty()) g.data_dir = "data";
  app.add_option("--seed", g.seed, "master random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads for trials (0 = all cores)")->capture_default_str();
  app.add_flag("--f64-strict", g.f64_strict,
               "check incremental logits against dense forward passes during attacks");
  app.add_option("--data-dir", g.data_dir,
                 std::string("dataset root directory (default $") + kDataRootVariable + " or ./data)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a GCN and write a weight file");
  train_cmd->add_option("--dataset", train_args.dataset, "cora, citeseer or a path prefix")->required();
  train_cmd->add_option("--arch", train_args.arch, "gcn2, gcn3 or gcn4")->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "weight file to write")->required();
  train_cmd->add_option("--split", train_args.split, "split file to reuse or write (default <out>.split)");
  train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr)->capture_default_str();
  train_cmd->add_option("--weight-decay", train_args.weight_decay)->capture_default_str();
  train_cmd->add_option("--dropout", train_args.dropout)->capture_default_str();
  train_cmd->add_option("--labeled-fraction", train_args.labeled_fraction)->capture_default_str();

  AttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand("attack", "run one attack");
  attack_cmd->add_option("--dataset", attack_args.dataset)->required();
  attack_cmd->add_option("--weights", attack_args.weights)->required();
  attack_cmd->add_option("--target", attack_args.target, "target node id")->required();
  attack_cmd->add_option("--class", attack_args.target_class, "target class name or index")->required();
  attack_cmd->add_option("--poison", attack_args.poison, "comma-separated node ids, or auto:m[:k]")->required();
  attack_cmd->add_option("--beta", attack_args.beta, "infection penalty weight")->capture_default_str();
  attack_cmd->add_option("--out", attack_args.out, "write the trial as CSV");
  attack_args.flags.add_to(attack_cmd);

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand("select", "rank poison candidates by efficiency");
  select_cmd->add_option("--dataset", select_args.dataset)->required();
  select_cmd->add_option("--weights", select_args.weights, "optional; checked against the dataset");
  select_cmd->add_option("--target", select_args.target)->required();
  select_cmd->add_option("--hops", select_args.hops)->capture_default_str();
  select_cmd->add_option("--top", select_args.top, "keep the k best (0 = all)")->capture_default_str();
  select_cmd->add_option("--out", select_args.out, "write CSV here instead of stdout");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "reproduce one experiment table");
  eval_cmd->add_option("--dataset", eval_args.dataset)->required();
  eval_cmd->add_option("--weights", eval_args.weights)->required();
  eval_cmd->add_option("--table", eval_args.table, "3, 4, 5 or 6")->required();
  eval_cmd->add_option("--trials", eval_args.trials, "trials per setting (targets for table 5)")
      ->capture_default_str();
  eval_cmd->add_option("--hops", eval_args.hops, "hop distance(s), comma-separated");
  eval_cmd->add_option("--modes", eval_args.modes, "table 4 selection modes")->capture_default_str();
  eval_cmd->add_option("--beta", eval_args.beta, "table 6 penalty weight")->capture_default_str();
  eval_cmd->add_option("--min-candidates", eval_args.min_candidates,
                       "table 5: minimum distinct-efficiency candidates per target")
      ->capture_default_str();
  eval_cmd->add_option("--k-max", eval_args.k_max, "table 5: largest k for recall@k")->capture_default_str();
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "write CSVs and a manifest here");
  eval_args.flags.add_to(eval_cmd);

  std::string sweep_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a matrix of evaluations from a JSON config");
  sweep_cmd->add_option("config", sweep_config, "JSON config file")->required();

  SyntheticSpec synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic citation-like dataset");
  synth_cmd->add_option("--out", synth_out, "path prefix for .content and .cites")->required();
  synth_cmd->add_option("--nodes", synth.nodes)->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes)->capture_default_str();
  synth_cmd->add_option("--features", synth.feature_dim)->capture_default_str();
  synth_cmd->add_option("--mean-degree", synth.mean_degree)->capture_default_str();
  synth_cmd->add_option("--homophily", synth.homophily)->capture_default_str();
  synth_cmd->add_option("--words", synth.words_per_node)->capture_default_str();
  synth_cmd->add_option("--topic-strength", synth.topic_strength)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (g.workers == 0) g.workers = std::max(1u, std::thread::hardware_concurrency());

  try {
    if (*train_cmd) run_train(train_args, g);
    if (*attack_cmd) run_attack(attack_args, g);
    if (*select_cmd) run_select(select_args, g);
    if (*eval_cmd) {
      const json line = run_evaluate(eval_args, g);
      if (!eval_args.out_dir.empty()) emit(line);
    }
    if (*sweep_cmd) run_sweep(sweep_config, g);
    if (*synth_cmd) {
      synth.seed = g.seed;
      run_synth(synth, synth_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
