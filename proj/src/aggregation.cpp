#include "evtrust/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evtrust/errors.hpp"

namespace evtrust {

namespace {

void require_range(double value, double lo, double hi, bool lo_open, bool hi_open,
                   const char* field) {
  const bool ok = (lo_open ? value > lo : value >= lo) && (hi_open ? value < hi : value <= hi);
  if (!ok || std::isnan(value)) {
    throw ValidationError(std::string(field) + " must be in " + (lo_open ? "(" : "[") +
                          std::to_string(lo) + ", " + std::to_string(hi) + (hi_open ? ")" : "]") +
                          ", got " + std::to_string(value));
  }
}

const MlpParams& peer_params(const PeerModel& peer) {
  if (peer.params == nullptr) {
    throw AggregationError("neighbor " + std::to_string(peer.id) + " has no parameters");
  }
  return *peer.params;
}

}  // namespace

void TrustParams::validate() const {
  require_range(accuracy_weight, 0.0, 1.0, false, false, "accuracy_weight");
  require_range(uncertainty_threshold, 0.0, 1.0, true, true, "uncertainty_threshold");
  // 1.0 is allowed: it is the "accept nobody" setting.
  require_range(initial_min_trust, 0.0, 1.0, true, false, "initial_min_trust");
  require_range(tighten_depth, 0.0, 1.0, false, true, "tighten_depth");
  if (!(tighten_rate > 0.0) || !std::isfinite(tighten_rate)) {
    throw ValidationError("tighten_rate must be > 0, got " + std::to_string(tighten_rate));
  }
  require_range(ema_momentum, 0.0, 1.0, true, false, "ema_momentum");
  require_range(self_weight, 0.0, 1.0, false, false, "self_weight");
  if (max_eval_samples <= 0) throw ValidationError("max_eval_samples must be positive");
}

std::size_t TrustReport::accepted_count() const {
  return static_cast<std::size_t>(
      std::count_if(neighbors.begin(), neighbors.end(), [](const auto& n) { return n.accepted; }));
}

PeerEvaluation evaluate_peer(const MlpParams& peer, const LabeledBatch& val_subset,
                             double logit_clamp) {
  if (val_subset.size() == 0) throw EvaluationError("evaluate_peer: empty validation subset");
  const Eigen::MatrixXd alpha = forward_alpha_batch(peer, val_subset.inputs, logit_clamp);
  const auto num_classes = static_cast<double>(alpha.rows());
  double vacuity_sum = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index b = 0; b < alpha.cols(); ++b) {
    const Eigen::VectorXd column = alpha.col(b);
    vacuity_sum += num_classes / column.sum();
    if (argmax_class(column) == val_subset.labels[static_cast<std::size_t>(b)]) ++correct;
  }
  const auto n = static_cast<double>(val_subset.size());
  return {vacuity_sum / n, static_cast<double>(correct) / n};
}

double trust_score(double mean_vacuity, double accuracy, const TrustParams& params) {
  const double u = std::clamp(mean_vacuity, 0.0, 1.0);
  const double acc = std::clamp(accuracy, 0.0, 1.0);
  double trust = (1.0 - u) * (params.accuracy_weight * acc + (1.0 - params.accuracy_weight));
  if (u > params.uncertainty_threshold) trust *= std::exp(-(u - params.uncertainty_threshold));
  return std::clamp(trust, 0.0, 1.0);
}

double adaptive_threshold(int round_t, int total_rounds, const TrustParams& params) {
  const double progress =
      total_rounds > 0 ? static_cast<double>(round_t) / static_cast<double>(total_rounds) : 1.0;
  return params.initial_min_trust *
         (1.0 - params.tighten_depth * std::exp(-params.tighten_rate * progress));
}

double ema_update(TrustState& state, std::size_t neighbor, double raw_trust, double momentum) {
  auto [it, inserted] = state.smoothed.try_emplace(neighbor, raw_trust);
  if (!inserted) it->second = momentum * raw_trust + (1.0 - momentum) * it->second;
  return it->second;
}

AggregationResult trust_aware_aggregate(std::size_t node_id, const MlpParams& local,
                                        std::span<const PeerModel> neighbors,
                                        const LabeledBatch& val_subset, int round_t,
                                        int total_rounds, const TrustParams& params,
                                        TrustState& state, double logit_clamp) {
  AggregationResult result{local, {}};
  TrustReport& report = result.report;
  report.node = node_id;
  report.threshold = adaptive_threshold(round_t, total_rounds, params);

  for (const PeerModel& peer : neighbors) {
    const MlpParams& model = peer_params(peer);
    if (!model.same_shape(local)) {
      throw AggregationError("node " + std::to_string(node_id) + ": neighbor " +
                             std::to_string(peer.id) + " has a different parameter shape");
    }
    const PeerEvaluation eval = evaluate_peer(model, val_subset, logit_clamp);
    NeighborTrust entry;
    entry.neighbor = peer.id;
    entry.mean_vacuity = eval.mean_vacuity;
    entry.accuracy = eval.accuracy;
    entry.raw_trust = trust_score(eval.mean_vacuity, eval.accuracy, params);
    if (params.ema_enabled) {
      entry.smoothed_trust = ema_update(state, peer.id, entry.raw_trust, params.ema_momentum);
    } else {
      entry.smoothed_trust = entry.raw_trust;
      state.smoothed[peer.id] = entry.raw_trust;
    }
    entry.accepted = entry.smoothed_trust >= report.threshold;
    report.neighbors.push_back(entry);
  }

  double total_trust = 0.0;
  for (const auto& entry : report.neighbors) {
    if (entry.accepted) total_trust += entry.smoothed_trust;
  }
  if (report.accepted_count() == 0 || !(total_trust > 0.0)) {
    for (auto& entry : report.neighbors) entry.accepted = false;
    return result;
  }

  MlpParams peers = local.zeros_like();
  for (std::size_t i = 0; i < report.neighbors.size(); ++i) {
    auto& entry = report.neighbors[i];
    if (!entry.accepted) continue;
    entry.weight = entry.smoothed_trust / total_trust;
    peers.add_scaled(*neighbors[i].params, entry.weight);
  }
  result.params = local;
  result.params.scale(params.self_weight).add_scaled(peers, 1.0 - params.self_weight);
  return result;
}

MlpParams fedavg_aggregate(const MlpParams& local, std::span<const PeerModel> neighbors) {
  if (neighbors.empty()) return local;
  MlpParams sum = local;
  for (const PeerModel& peer : neighbors) {
    const MlpParams& model = peer_params(peer);
    if (!model.same_shape(local)) {
      throw AggregationError("fedavg: neighbor " + std::to_string(peer.id) +
                             " has a different parameter shape");
    }
    sum.add_scaled(model, 1.0);
  }
  return sum.scale(1.0 / static_cast<double>(neighbors.size() + 1));
}

}  // namespace evtrust
