#pragma once

#include <Eigen/Dense>

namespace evtrust {

/// Dirichlet output of an evidential classifier for one sample.
struct EvidentialOutput {
  Eigen::VectorXd alpha;  // concentration, alpha_k = exp(z_k) + 1
  double strength = 0.0;  // S = sum alpha_k
  double vacuity = 0.0;   // u = K / S
  double entropy = 0.0;   // entropy of the expected class probabilities
  int predicted = 0;      // argmax alpha, lowest index on ties
};

/// Builds every derived quantity from a concentration vector.
EvidentialOutput summarize_dirichlet(const Eigen::VectorXd& alpha);

/// Epistemic uncertainty K / sum(alpha). Requires alpha_k > 0.
double vacuity(const Eigen::VectorXd& alpha);

/// Entropy of alpha / S. Requires alpha_k > 0; result lies in [0, ln K].
double aleatoric_entropy(const Eigen::VectorXd& alpha);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_class(const Eigen::VectorXd& alpha);

/// Closed-form KL( Dir(alpha_tilde) || Dir(1, ..., 1) ). Requires every
/// alpha_tilde_k >= 1 and returns exactly 0 for the all-ones vector.
double kl_dirichlet_to_uniform(const Eigen::VectorXd& alpha_tilde);

/// Gradient of kl_dirichlet_to_uniform with respect to alpha_tilde.
Eigen::VectorXd kl_dirichlet_to_uniform_gradient(const Eigen::VectorXd& alpha_tilde);

struct LossBreakdown {
  double mse_term = 0.0;
  double kl_term = 0.0;
  double lambda_t = 0.0;
  double total = 0.0;  // mse_term + lambda_t * kl_term
};

/// Evidential loss for one sample. The KL regularizer is evaluated on
/// alpha with the true-class entry replaced by 1, so only evidence placed
/// on wrong classes is penalized. `onehot` must hold a single 1.
LossBreakdown evidential_loss(const Eigen::VectorXd& alpha, const Eigen::VectorXd& onehot,
                              double lambda_t);

/// Same loss with the target given as a class index.
LossBreakdown evidential_loss(const Eigen::VectorXd& alpha, int label, double lambda_t);

/// d(loss)/d(alpha) for one sample, matching evidential_loss(alpha, label, lambda_t).
Eigen::VectorXd evidential_loss_gradient(const Eigen::VectorXd& alpha, int label,
                                         double lambda_t);

/// KL weight for round t of T: lambda_max * min(1, 2t/T), a linear ramp
/// that saturates halfway through training.
double anneal_lambda(int round_t, int total_rounds, double lambda_max);

}  // namespace evtrust
