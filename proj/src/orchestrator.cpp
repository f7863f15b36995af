#include "evtrust/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "evtrust/errors.hpp"
#include "evtrust/seed.hpp"

namespace evtrust {

namespace {

// Rethrows the in-flight exception with `context` prepended, keeping its category.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  }
#define EVTRUST_RETHROW(type) \
  catch (const type& e) { throw type(context + e.what()); }
  EVTRUST_RETHROW(ConfigError)
  EVTRUST_RETHROW(InputError)
  EVTRUST_RETHROW(DomainError)
  EVTRUST_RETHROW(GenerationError)
  EVTRUST_RETHROW(PartitionError)
  EVTRUST_RETHROW(SplitError)
  EVTRUST_RETHROW(ParseError)
  EVTRUST_RETHROW(ValidationError)
  EVTRUST_RETHROW(EvaluationError)
  EVTRUST_RETHROW(AggregationError)
  EVTRUST_RETHROW(IoError)
  EVTRUST_RETHROW(Error)
#undef EVTRUST_RETHROW
  catch (const std::exception& e) {
    throw Error(context + e.what());
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index must
// touch only its own state. The lowest-index failure is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) guarded(i);
      });
    }
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

Dataset build_dataset(const ExperimentConfig& config) {
  Dataset data;
  if (const auto* synth = std::get_if<SyntheticDatasetConfig>(&config.dataset.source)) {
    data = synth_blobs(synth->num_classes, synth->dim, synth->samples_per_class, synth->separation,
                       synth->noise_sigma, derive_seed(config.master_seed, seed_tag::kDataset, 0));
  } else {
    const auto& csv = std::get<CsvDatasetConfig>(config.dataset.source);
    CsvOptions options;
    options.label_column = csv.label_column;
    options.subject_column = csv.subject_column;
    options.has_header = csv.header;
    data = load_csv(csv.path, options);
  }
  data.validate();
  return config.dataset.standardize ? standardize(data) : data;
}

TopologyGraph build_graph(const ExperimentConfig& config) {
  const auto n = static_cast<std::size_t>(config.topology.nodes);
  const std::uint64_t seed = derive_seed(config.master_seed, seed_tag::kTopology, 0);
  switch (config.topology.kind) {
    case TopologyKind::kRing:
      return ring(n);
    case TopologyKind::kFullyConnected:
      return fully_connected(n);
    case TopologyKind::kErdosRenyi:
      return erdos_renyi(n, config.topology.p, seed);
    case TopologyKind::kKRegular:
      return k_regular(n, static_cast<std::size_t>(config.topology.k), seed);
  }
  throw ConfigError("unknown topology kind");
}

std::vector<IndexList> build_partition(const ExperimentConfig& config, const Dataset& data) {
  const auto n = static_cast<std::size_t>(config.topology.nodes);
  const std::uint64_t seed = derive_seed(config.master_seed, seed_tag::kPartition, 0);
  const PartitionConfig& part = config.partition;
  switch (part.mode) {
    case PartitionMode::kDirichlet:
      return partition_dirichlet(data, n, part.concentration,
                                 static_cast<std::size_t>(part.min_per_node), seed);
    case PartitionMode::kBySubject:
      return partition_by_subject(data, n);
    case PartitionMode::kLabelGroups:
      return partition_label_groups(data, n, part.groups, seed);
    case PartitionMode::kIid:
      return partition_iid(data, n, seed);
  }
  throw ConfigError("unknown partition mode");
}

double accuracy_on(const MlpParams& params, const LabeledBatch& data, double logit_clamp) {
  if (data.size() == 0) throw EvaluationError("empty test split");
  const Eigen::MatrixXd alpha = forward_alpha_batch(params, data.inputs, logit_clamp);
  std::size_t correct = 0;
  for (Eigen::Index b = 0; b < alpha.cols(); ++b) {
    if (argmax_class(alpha.col(b)) == data.labels[static_cast<std::size_t>(b)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

Federation build_federation(const ExperimentConfig& config) {
  validate_config(config);
  Federation fed;
  fed.dataset = build_dataset(config);
  fed.graph = build_graph(config);
  const auto partition = build_partition(config, fed.dataset);

  std::vector<int> widths{fed.dataset.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(fed.dataset.num_classes);

  const std::uint64_t master = config.master_seed;
  const auto eval_cap = static_cast<std::size_t>(config.aggregator.trust.max_eval_samples);
  fed.nodes.resize(partition.size());
  for (std::size_t i = 0; i < partition.size(); ++i) {
    try {
      NodeState& node = fed.nodes[i];
      node.node_id = i;
      node.data = split_node(partition[i], config.partition.split,
                             derive_seed(master, seed_tag::kSplit, i));
      Rng init_rng(derive_seed(master, seed_tag::kNodeInit, i));
      node.params = MlpParams::random_init(widths, init_rng);
      node.rng_seed = derive_seed(master, seed_tag::kNodeShuffle, i);
      node.rng.seed(node.rng_seed);

      IndexList eval = node.data.val;
      Rng eval_rng(derive_seed(master, seed_tag::kValSubset, i));
      std::shuffle(eval.begin(), eval.end(), eval_rng);
      if (eval.size() > eval_cap) eval.resize(eval_cap);

      node.train_set = fed.dataset.gather(node.data.train);
      node.eval_subset = fed.dataset.gather(eval);
      node.test_set = fed.dataset.gather(node.data.test);
    } catch (...) {
      rethrow_with_context("node " + std::to_string(i) + ": ");
    }
  }
  return fed;
}

std::vector<TrustReport> run_round(std::vector<NodeState>& states, const RoundContext& context,
                                   int round_t) {
  if (context.graph == nullptr) throw ConfigError("run_round: no topology");
  const TopologyGraph& graph = *context.graph;
  if (graph.size() != states.size()) {
    throw ConfigError("run_round: " + std::to_string(states.size()) + " nodes but topology has " +
                      std::to_string(graph.size()));
  }
  const std::size_t n = states.size();

  parallel_for(n, context.threads, [&](std::size_t i) {
    try {
      NodeState& node = states[i];
      node.params = local_train(node.params, node.train_set, context.train, round_t,
                                context.total_rounds, node.rng)
                        .params;
    } catch (...) {
      rethrow_with_context("node " + std::to_string(i) + " training: ");
    }
  });

  // Everything below reads only this snapshot.
  std::vector<MlpParams> snapshot;
  snapshot.reserve(n);
  for (const auto& node : states) snapshot.push_back(node.params);

  std::vector<std::size_t> order = context.aggregation_order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.size() != n) throw ConfigError("run_round: aggregation order has the wrong length");

  std::vector<MlpParams> next(n);
  std::vector<TrustReport> reports(n);
  parallel_for(n, context.threads, [&](std::size_t slot) {
    const std::size_t i = order[slot];
    try {
      std::vector<PeerModel> peers;
      for (std::size_t j : graph.neighbors(i)) peers.push_back({j, &snapshot[j]});
      switch (context.aggregator) {
        case AggregatorKind::kEvidentialTrust: {
          auto result = trust_aware_aggregate(i, snapshot[i], peers, states[i].eval_subset,
                                              round_t, context.total_rounds, context.trust,
                                              states[i].trust_state, context.train.logit_clamp);
          next[i] = std::move(result.params);
          reports[i] = std::move(result.report);
          break;
        }
        case AggregatorKind::kFedAvg:
          next[i] = fedavg_aggregate(snapshot[i], peers);
          break;
        case AggregatorKind::kLocal:
          next[i] = snapshot[i];
          break;
      }
    } catch (...) {
      rethrow_with_context("node " + std::to_string(i) + " aggregation: ");
    }
  });

  for (std::size_t i = 0; i < n; ++i) states[i].params = std::move(next[i]);
  if (context.aggregator != AggregatorKind::kEvidentialTrust) reports.clear();
  return reports;
}

RoundMetrics evaluate_all(const std::vector<NodeState>& states, int round_t, double logit_clamp) {
  RoundMetrics metrics;
  metrics.round = round_t;
  metrics.per_node_accuracy.reserve(states.size());
  for (const auto& node : states) {
    metrics.per_node_accuracy.push_back(accuracy_on(node.params, node.test_set, logit_clamp));
  }
  if (states.empty()) return metrics;
  const double n = static_cast<double>(states.size());
  const auto& acc = metrics.per_node_accuracy;
  metrics.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
  double var = 0.0;
  for (double a : acc) var += (a - metrics.mean_accuracy) * (a - metrics.mean_accuracy);
  metrics.std_accuracy = std::sqrt(var / n);
  return metrics;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  Federation fed = build_federation(config);

  RoundContext context;
  context.graph = &fed.graph;
  context.aggregator = config.aggregator.kind;
  context.train = config.training;
  context.trust = config.aggregator.trust;
  context.total_rounds = config.rounds;
  context.threads = options.threads;

  ExperimentResult result;
  result.config = config;
  result.initial = evaluate_all(fed.nodes, 0, config.training.logit_clamp);
  result.history.reserve(static_cast<std::size_t>(config.rounds));
  for (int t = 1; t <= config.rounds; ++t) {
    try {
      auto reports = run_round(fed.nodes, context, t);
      RoundMetrics metrics = evaluate_all(fed.nodes, t, config.training.logit_clamp);
      metrics.trust_reports = std::move(reports);
      if (options.on_round) options.on_round(metrics);
      result.history.push_back(std::move(metrics));
    } catch (...) {
      rethrow_with_context("round " + std::to_string(t) + ", ");
    }
  }

  const RoundMetrics& last = result.history.empty() ? result.initial : result.history.back();
  result.summary.mean_accuracy = last.mean_accuracy;
  result.summary.std_accuracy = last.std_accuracy;
  if (!result.history.empty()) result.summary.rounds_to_peak = rounds_to_peak(result.history);
  return result;
}

int rounds_to_peak(std::span<const double> mean_accuracies) {
  if (mean_accuracies.empty()) throw InputError("rounds_to_peak: empty history");
  const double best = *std::max_element(mean_accuracies.begin(), mean_accuracies.end());
  const double target = 0.99 * best;
  for (std::size_t i = 0; i < mean_accuracies.size(); ++i) {
    if (mean_accuracies[i] >= target) return static_cast<int>(i + 1);
  }
  return static_cast<int>(mean_accuracies.size());
}

int rounds_to_peak(std::span<const RoundMetrics> history) {
  std::vector<double> means;
  means.reserve(history.size());
  for (const auto& m : history) means.push_back(m.mean_accuracy);
  return rounds_to_peak(std::span<const double>(means));
}

double degradation(const ExperimentResult& iid, const ExperimentResult& non_iid) {
  return 100.0 * (iid.summary.mean_accuracy - non_iid.summary.mean_accuracy);
}

}  // namespace evtrust
