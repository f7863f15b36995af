#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "evtrust/aggregation.hpp"
#include "evtrust/config.hpp"
#include "evtrust/data.hpp"
#include "evtrust/mlp.hpp"
#include "evtrust/topology.hpp"

namespace evtrust {

struct NodeState {
  std::size_t node_id = 0;
  MlpParams params;
  NodeData data;
  LabeledBatch train_set;
  LabeledBatch eval_subset;  // at most max_eval_samples of the validation split, fixed at init
  LabeledBatch test_set;
  TrustState trust_state;
  std::uint64_t rng_seed = 0;
  Rng rng;
};

struct RoundMetrics {
  int round = 0;
  std::vector<double> per_node_accuracy;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population form
  std::vector<TrustReport> trust_reports;  // empty unless the trust aggregator ran
};

struct FinalSummary {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::optional<int> rounds_to_peak;  // absent when no round ran
};

struct ExperimentResult {
  ExperimentConfig config;
  RoundMetrics initial;  // round 0, before any training
  std::vector<RoundMetrics> history;
  FinalSummary summary;
};

/// Everything a round needs besides the node states.
struct RoundContext {
  const TopologyGraph* graph = nullptr;
  AggregatorKind aggregator = AggregatorKind::kEvidentialTrust;
  TrainConfig train;
  TrustParams trust;
  int total_rounds = 1;
  unsigned threads = 1;
  /// Order in which nodes aggregate; empty means 0..n-1. Results do not
  /// depend on it because aggregation only reads the post-training snapshot.
  std::vector<std::size_t> aggregation_order;
};

/// Dataset, graph and initialized node states for a config, all derived from
/// the master seed.
struct Federation {
  Dataset dataset;
  TopologyGraph graph;
  std::vector<NodeState> nodes;
};

Federation build_federation(const ExperimentConfig& config);

/// One synchronous round: every node trains from its round-start
/// parameters, then every node aggregates against the same post-training
/// snapshot of its neighbours. Returns trust reports for the trust aggregator.
std::vector<TrustReport> run_round(std::vector<NodeState>& states, const RoundContext& context,
                                   int round_t);

/// Each node scored on its own test split.
RoundMetrics evaluate_all(const std::vector<NodeState>& states, int round_t,
                          double logit_clamp = 10.0);

struct RunOptions {
  unsigned threads = 1;
  /// Invoked after each round, e.g. for streaming metrics.
  std::function<void(const RoundMetrics&)> on_round;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// First round (1-based) whose mean accuracy reaches 99% of the best mean accuracy.
int rounds_to_peak(std::span<const RoundMetrics> history);
int rounds_to_peak(std::span<const double> mean_accuracies);

/// Final mean accuracy of the IID run minus that of the non-IID run, in percentage points.
double degradation(const ExperimentResult& iid, const ExperimentResult& non_iid);

}  // namespace evtrust
