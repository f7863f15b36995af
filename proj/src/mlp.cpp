#include "evtrust/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "evtrust/errors.hpp"

namespace evtrust {

MlpParams::MlpParams(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

MlpParams MlpParams::zeros(std::span<const int> widths) {
  if (widths.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] <= 0 || widths[i + 1] <= 0) {
      throw ConfigError("layer widths must be positive");
    }
    layers.push_back({Eigen::MatrixXd::Zero(widths[i + 1], widths[i]),
                      Eigen::VectorXd::Zero(widths[i + 1])});
  }
  return MlpParams(std::move(layers));
}

MlpParams MlpParams::random_init(std::span<const int> widths, Rng& rng) {
  MlpParams params = zeros(widths);
  for (auto& layer : params.layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Column-major fill order keeps the draw sequence fixed for a given shape.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        layer.weight(i, j) = dist(rng);
      }
    }
  }
  return params;
}

int MlpParams::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int MlpParams::num_classes() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::vector<int> MlpParams::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(input_dim());
  for (const auto& layer : layers_) w.push_back(static_cast<int>(layer.weight.rows()));
  return w;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      return false;
    }
  }
  return true;
}

bool MlpParams::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

void MlpParams::validate() const {
  if (layers_.empty()) throw ConfigError("MLP has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.bias.size() != layer.weight.rows()) {
      throw ConfigError("layer " + std::to_string(i) + ": bias length does not match rows");
    }
    if (i > 0 && layer.weight.cols() != layers_[i - 1].weight.rows()) {
      throw ConfigError("layer " + std::to_string(i) + ": input width " +
                        std::to_string(layer.weight.cols()) + " does not chain with " +
                        std::to_string(layers_[i - 1].weight.rows()));
    }
  }
  if (!all_finite()) throw ConfigError("MLP parameters contain non-finite entries");
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out = *this;
  for (auto& layer : out.layers_) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return out;
}

MlpParams& MlpParams::add_scaled(const MlpParams& other, double factor) {
  if (!same_shape(other)) throw ConfigError("add_scaled: parameter shapes differ");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight += factor * other.layers_[i].weight;
    layers_[i].bias += factor * other.layers_[i].bias;
  }
  return *this;
}

MlpParams& MlpParams::scale(double factor) {
  for (auto& layer : layers_) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
  return *this;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (local_epochs < 0) throw ValidationError("local_epochs must be >= 0");
  if (!(lambda_max >= 0.0)) throw ValidationError("lambda_max must be >= 0");
  if (!(logit_clamp > 0.0)) throw ValidationError("logit_clamp must be > 0");
}

namespace {

void check_input(const MlpParams& params, Eigen::Index rows) {
  if (params.layers().empty()) throw ConfigError("MLP has no layers");
  if (rows != params.input_dim()) {
    throw ConfigError("feature dimension " + std::to_string(rows) +
                      " does not match network input " + std::to_string(params.input_dim()));
  }
}

}  // namespace

Eigen::VectorXd forward_logits(const MlpParams& params, const Eigen::VectorXd& features,
                               double logit_clamp) {
  check_input(params, features.size());
  if (!features.allFinite()) throw InputError("feature vector contains non-finite values");
  const auto& layers = params.layers();
  Eigen::VectorXd activation = features;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::VectorXd z = layers[i].weight * activation + layers[i].bias;
    if (i + 1 < layers.size()) {
      activation = z.cwiseMax(0.0);
    } else {
      activation = z.cwiseMax(-logit_clamp).cwiseMin(logit_clamp);
    }
  }
  return activation;
}

EvidentialOutput forward(const MlpParams& params, const Eigen::VectorXd& features,
                         double logit_clamp) {
  const Eigen::VectorXd logits = forward_logits(params, features, logit_clamp);
  return summarize_dirichlet((logits.array().exp() + 1.0).matrix());
}

Eigen::MatrixXd forward_alpha_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                    double logit_clamp) {
  check_input(params, inputs.rows());
  if (!inputs.allFinite()) throw InputError("batch contains non-finite features");
  const auto& layers = params.layers();
  Eigen::MatrixXd activation = inputs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weight * activation;
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) {
      activation = z.cwiseMax(0.0);
    } else {
      activation = (z.cwiseMax(-logit_clamp).cwiseMin(logit_clamp).array().exp() + 1.0).matrix();
    }
  }
  return activation;
}

BackwardResult backward(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        std::span<const int> labels, double lambda_t, double logit_clamp) {
  check_input(params, inputs.rows());
  const auto batch = static_cast<Eigen::Index>(labels.size());
  if (batch == 0) throw ConfigError("backward: empty batch");
  if (inputs.cols() != batch) {
    throw ConfigError("backward: " + std::to_string(inputs.cols()) + " inputs but " +
                      std::to_string(batch) + " labels");
  }

  const auto& layers = params.layers();
  const std::size_t depth = layers.size();

  // activations[i] feeds layer i; pre[i] is layer i's pre-activation.
  std::vector<Eigen::MatrixXd> activations(depth);
  std::vector<Eigen::MatrixXd> pre(depth);
  activations[0] = inputs;
  for (std::size_t i = 0; i < depth; ++i) {
    pre[i] = layers[i].weight * activations[i];
    pre[i].colwise() += layers[i].bias;
    if (i + 1 < depth) activations[i + 1] = pre[i].cwiseMax(0.0);
  }

  const Eigen::MatrixXd& logits = pre.back();
  const Eigen::MatrixXd evidence = logits.cwiseMax(-logit_clamp).cwiseMin(logit_clamp).array().exp();
  const Eigen::Index num_classes = logits.rows();

  Eigen::MatrixXd delta(num_classes, batch);
  BackwardResult result;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::VectorXd alpha = (evidence.col(b).array() + 1.0).matrix();
    const int label = labels[static_cast<std::size_t>(b)];
    const LossBreakdown loss = evidential_loss(alpha, label, lambda_t);
    result.mean_loss.mse_term += loss.mse_term * inv_batch;
    result.mean_loss.kl_term += loss.kl_term * inv_batch;
    result.mean_loss.total += loss.total * inv_batch;

    const Eigen::VectorXd grad_alpha = evidential_loss_gradient(alpha, label, lambda_t);
    for (Eigen::Index k = 0; k < num_classes; ++k) {
      const double z = logits(k, b);
      const bool clamped = z > logit_clamp || z < -logit_clamp;
      delta(k, b) = clamped ? 0.0 : grad_alpha[k] * evidence(k, b) * inv_batch;
    }
  }
  result.mean_loss.lambda_t = lambda_t;

  std::vector<DenseLayer> grads(depth);
  for (std::size_t i = depth; i-- > 0;) {
    grads[i].weight = delta * activations[i].transpose();
    grads[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd upstream = layers[i].weight.transpose() * delta;
      delta = upstream.cwiseProduct((pre[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  result.gradients = MlpParams(std::move(grads));
  return result;
}

MlpParams sgd_step(const MlpParams& params, const MlpGradients& gradients,
                   double learning_rate) {
  if (!params.same_shape(gradients)) throw ConfigError("sgd_step: gradient shape mismatch");
  MlpParams next = params;
  if (learning_rate == 0.0) return next;
  next.add_scaled(gradients, -learning_rate);
  return next;
}

namespace {

LabeledBatch gather(const LabeledBatch& data, std::span<const std::size_t> order) {
  LabeledBatch batch;
  batch.inputs.resize(data.inputs.rows(), static_cast<Eigen::Index>(order.size()));
  batch.labels.reserve(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    batch.inputs.col(static_cast<Eigen::Index>(j)) =
        data.inputs.col(static_cast<Eigen::Index>(order[j]));
    batch.labels.push_back(data.labels[order[j]]);
  }
  return batch;
}

}  // namespace

TrainOutcome local_train(const MlpParams& params, const LabeledBatch& train,
                         const TrainConfig& config, int round_t, int total_rounds, Rng& rng) {
  TrainOutcome outcome{params, 0.0, 0.0, false};
  if (train.size() == 0) {
    outcome.empty_split = true;
    return outcome;
  }
  if (static_cast<std::size_t>(train.inputs.cols()) != train.size()) {
    throw ConfigError("local_train: inputs and labels disagree in length");
  }
  const double lambda_t = anneal_lambda(round_t, total_rounds, config.lambda_max);
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      const LabeledBatch batch =
          gather(train, std::span<const std::size_t>(order).subspan(start, stop - start));
      BackwardResult step = backward(outcome.params, batch.inputs, batch.labels, lambda_t,
                                     config.logit_clamp);
      epoch_loss += step.mean_loss.total * static_cast<double>(stop - start);
      outcome.params = sgd_step(outcome.params, step.gradients, config.learning_rate);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (epoch == 0) outcome.first_epoch_loss = epoch_loss;
    outcome.last_epoch_loss = epoch_loss;
  }
  return outcome;
}

LossBreakdown mean_loss(const MlpParams& params, const LabeledBatch& data, double lambda_t,
                        double logit_clamp) {
  LossBreakdown total;
  total.lambda_t = lambda_t;
  if (data.size() == 0) return total;
  const Eigen::MatrixXd alpha = forward_alpha_batch(params, data.inputs, logit_clamp);
  const double inv = 1.0 / static_cast<double>(data.size());
  for (Eigen::Index b = 0; b < alpha.cols(); ++b) {
    const LossBreakdown loss =
        evidential_loss(alpha.col(b), data.labels[static_cast<std::size_t>(b)], lambda_t);
    total.mse_term += loss.mse_term * inv;
    total.kl_term += loss.kl_term * inv;
    total.total += loss.total * inv;
  }
  return total;
}

}  // namespace evtrust
