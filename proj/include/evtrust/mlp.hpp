#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "evtrust/evidential.hpp"
#include "evtrust/seed.hpp"

namespace evtrust {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  bool operator==(const DenseLayer& other) const {
    return weight == other.weight && bias == other.bias;
  }
};

/// Parameters of a dense ReLU network whose last layer emits class logits.
/// Also used for gradients, which share the parameter shape.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(std::vector<DenseLayer> layers);

  /// All-zero parameters for the given layer widths (input, hidden..., classes).
  static MlpParams zeros(std::span<const int> widths);

  /// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases.
  static MlpParams random_init(std::span<const int> widths, Rng& rng);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  int input_dim() const;
  int num_classes() const;
  std::vector<int> widths() const;
  std::size_t parameter_count() const;

  bool same_shape(const MlpParams& other) const;
  bool all_finite() const;

  /// Throws ConfigError unless consecutive layers chain and every entry is finite.
  void validate() const;

  MlpParams zeros_like() const;
  /// this += scale * other (shapes must agree).
  MlpParams& add_scaled(const MlpParams& other, double scale);
  MlpParams& scale(double factor);

  bool operator==(const MlpParams& other) const { return layers_ == other.layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

using MlpGradients = MlpParams;

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 32;
  int local_epochs = 5;
  double lambda_max = 1.0;
  double logit_clamp = 10.0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Raw logits for one sample, clamped to [-clamp, clamp].
Eigen::VectorXd forward_logits(const MlpParams& params, const Eigen::VectorXd& features,
                               double logit_clamp = 10.0);

/// Single-sample forward pass producing the Dirichlet summary.
EvidentialOutput forward(const MlpParams& params, const Eigen::VectorXd& features,
                         double logit_clamp = 10.0);

/// Concentration parameters for a batch; inputs are dim x batch, result is K x batch.
Eigen::MatrixXd forward_alpha_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                    double logit_clamp = 10.0);

struct BackwardResult {
  MlpGradients gradients;
  LossBreakdown mean_loss;  // averaged over the batch
};

/// Mean-over-batch gradient of the evidential loss. Inputs are dim x batch.
BackwardResult backward(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        std::span<const int> labels, double lambda_t,
                        double logit_clamp = 10.0);

/// params - learning_rate * gradients.
MlpParams sgd_step(const MlpParams& params, const MlpGradients& gradients,
                   double learning_rate);

/// Labelled samples in column layout.
struct LabeledBatch {
  Eigen::MatrixXd inputs;  // dim x n
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct TrainOutcome {
  MlpParams params;
  double first_epoch_loss = 0.0;  // mean loss over the first epoch's batches
  double last_epoch_loss = 0.0;
  bool empty_split = false;       // set when there was nothing to train on
};

/// E epochs of shuffled mini-batch SGD. The KL weight is fixed for the whole
/// call from anneal_lambda(round_t, total_rounds, lambda_max).
TrainOutcome local_train(const MlpParams& params, const LabeledBatch& train,
                         const TrainConfig& config, int round_t, int total_rounds, Rng& rng);

/// Mean evidential loss of `params` on `data` (no gradient).
LossBreakdown mean_loss(const MlpParams& params, const LabeledBatch& data, double lambda_t,
                        double logit_clamp = 10.0);

}  // namespace evtrust
