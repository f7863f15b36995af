#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "evtrust/mlp.hpp"

namespace evtrust {

struct TrustParams {
  double accuracy_weight = 0.5;        // w_a
  double uncertainty_threshold = 0.5;  // vacuity level above which trust is penalized
  double initial_min_trust = 0.3;      // asymptotic acceptance threshold
  double tighten_depth = 0.5;          // how far below the asymptote the threshold starts
  double tighten_rate = 3.0;
  bool ema_enabled = true;
  double ema_momentum = 0.6;           // weight of the newest raw score
  double self_weight = 0.5;
  int max_eval_samples = 100;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  bool operator==(const TrustParams&) const = default;
};

/// Smoothed trust per neighbour, owned by a single node.
struct TrustState {
  std::map<std::size_t, double> smoothed;

  bool operator==(const TrustState&) const = default;
};

struct NeighborTrust {
  std::size_t neighbor = 0;
  double mean_vacuity = 0.0;
  double accuracy = 0.0;
  double raw_trust = 0.0;
  double smoothed_trust = 0.0;
  bool accepted = false;
  double weight = 0.0;  // normalized over accepted neighbours, 0 otherwise

  bool operator==(const NeighborTrust&) const = default;
};

struct TrustReport {
  std::size_t node = 0;
  double threshold = 0.0;
  std::vector<NeighborTrust> neighbors;

  std::size_t accepted_count() const;
  bool operator==(const TrustReport&) const = default;
};

struct PeerEvaluation {
  double mean_vacuity = 0.0;
  double accuracy = 0.0;
};

/// One forward pass per validation sample: mean vacuity and accuracy of the peer.
PeerEvaluation evaluate_peer(const MlpParams& peer, const LabeledBatch& val_subset,
                             double logit_clamp = 10.0);

/// (1 - u)(w_a * acc + 1 - w_a), damped by exp(-(u - tau_u)) once u exceeds tau_u.
double trust_score(double mean_vacuity, double accuracy, const TrustParams& params);

/// tau0 * (1 - depth * exp(-rate * t / T)).
double adaptive_threshold(int round_t, int total_rounds, const TrustParams& params);

/// First observation passes through; afterwards gamma * raw + (1 - gamma) * previous.
double ema_update(TrustState& state, std::size_t neighbor, double raw_trust, double momentum);

/// Read-only view of a neighbour's parameters.
struct PeerModel {
  std::size_t id = 0;
  const MlpParams* params = nullptr;
};

struct AggregationResult {
  MlpParams params;
  TrustReport report;
};

/// Scores every neighbour on the node's validation subset, keeps those whose
/// smoothed trust clears the round threshold, and blends their
/// trust-weighted average with the local model using the self-weight. With no
/// accepted neighbour the local model is returned untouched.
AggregationResult trust_aware_aggregate(std::size_t node_id, const MlpParams& local,
                                        std::span<const PeerModel> neighbors,
                                        const LabeledBatch& val_subset, int round_t,
                                        int total_rounds, const TrustParams& params,
                                        TrustState& state, double logit_clamp = 10.0);

/// Equal-weight mean over the local model and all neighbours.
MlpParams fedavg_aggregate(const MlpParams& local, std::span<const PeerModel> neighbors);

}  // namespace evtrust
