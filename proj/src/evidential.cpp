#include "evtrust/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evtrust/errors.hpp"
#include "evtrust/special.hpp"

namespace evtrust {

namespace {

void require_positive_alpha(const Eigen::VectorXd& alpha, const char* fn) {
  if (alpha.size() == 0) {
    throw DomainError(std::string(fn) + ": empty concentration vector");
  }
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0) || !std::isfinite(alpha[k])) {
      throw DomainError(std::string(fn) + ": alpha[" + std::to_string(k) +
                        "] must be finite and > 0, got " + std::to_string(alpha[k]));
    }
  }
}

void require_label(int label, Eigen::Index num_classes) {
  if (label < 0 || label >= num_classes) {
    throw InputError("label " + std::to_string(label) + " outside [0, " +
                     std::to_string(num_classes) + ")");
  }
}

}  // namespace

double vacuity(const Eigen::VectorXd& alpha) {
  require_positive_alpha(alpha, "vacuity");
  return static_cast<double>(alpha.size()) / alpha.sum();
}

double aleatoric_entropy(const Eigen::VectorXd& alpha) {
  require_positive_alpha(alpha, "aleatoric_entropy");
  const double strength = alpha.sum();
  double h = 0.0;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double p = alpha[k] / strength;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

int argmax_class(const Eigen::VectorXd& alpha) {
  int best = 0;
  for (Eigen::Index k = 1; k < alpha.size(); ++k) {
    if (alpha[k] > alpha[best]) best = static_cast<int>(k);
  }
  return best;
}

EvidentialOutput summarize_dirichlet(const Eigen::VectorXd& alpha) {
  require_positive_alpha(alpha, "summarize_dirichlet");
  EvidentialOutput out;
  out.alpha = alpha;
  out.strength = alpha.sum();
  out.vacuity = static_cast<double>(alpha.size()) / out.strength;
  out.entropy = aleatoric_entropy(alpha);
  out.predicted = argmax_class(alpha);
  return out;
}

double kl_dirichlet_to_uniform(const Eigen::VectorXd& alpha_tilde) {
  if (alpha_tilde.size() == 0) throw DomainError("kl_dirichlet_to_uniform: empty vector");
  bool all_ones = true;
  for (Eigen::Index k = 0; k < alpha_tilde.size(); ++k) {
    const double a = alpha_tilde[k];
    if (!(a >= 1.0) || !std::isfinite(a)) {
      throw DomainError("kl_dirichlet_to_uniform: alpha_tilde[" + std::to_string(k) +
                        "] must be >= 1, got " + std::to_string(a));
    }
    all_ones = all_ones && a == 1.0;
  }
  if (all_ones) return 0.0;

  const double num_classes = static_cast<double>(alpha_tilde.size());
  const double strength = alpha_tilde.sum();
  const double psi_strength = digamma(strength);
  double kl = log_gamma(strength) - log_gamma(num_classes);
  for (Eigen::Index k = 0; k < alpha_tilde.size(); ++k) {
    const double a = alpha_tilde[k];
    kl -= log_gamma(a);
    if (a != 1.0) kl += (a - 1.0) * (digamma(a) - psi_strength);
  }
  return std::max(kl, 0.0);
}

Eigen::VectorXd kl_dirichlet_to_uniform_gradient(const Eigen::VectorXd& alpha_tilde) {
  const auto num_classes = static_cast<double>(alpha_tilde.size());
  const double strength = alpha_tilde.sum();
  const double excess = (strength - num_classes) * trigamma(strength);
  Eigen::VectorXd grad(alpha_tilde.size());
  for (Eigen::Index k = 0; k < alpha_tilde.size(); ++k) {
    grad[k] = (alpha_tilde[k] - 1.0) * trigamma(alpha_tilde[k]) - excess;
  }
  return grad;
}

LossBreakdown evidential_loss(const Eigen::VectorXd& alpha, int label, double lambda_t) {
  require_positive_alpha(alpha, "evidential_loss");
  require_label(label, alpha.size());

  const double strength = alpha.sum();
  LossBreakdown loss;
  loss.lambda_t = lambda_t;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double y = (k == label) ? 1.0 : 0.0;
    const double diff = y - alpha[k] / strength;
    loss.mse_term += diff * diff;
  }
  Eigen::VectorXd alpha_tilde = alpha;
  alpha_tilde[label] = 1.0;
  loss.kl_term = kl_dirichlet_to_uniform(alpha_tilde);
  loss.total = loss.mse_term + lambda_t * loss.kl_term;
  return loss;
}

LossBreakdown evidential_loss(const Eigen::VectorXd& alpha, const Eigen::VectorXd& onehot,
                              double lambda_t) {
  if (onehot.size() != alpha.size()) {
    throw InputError("one-hot length " + std::to_string(onehot.size()) +
                     " does not match class count " + std::to_string(alpha.size()));
  }
  int label = -1;
  for (Eigen::Index k = 0; k < onehot.size(); ++k) {
    if (onehot[k] == 1.0) {
      if (label >= 0) throw InputError("one-hot vector has more than one hot entry");
      label = static_cast<int>(k);
    } else if (onehot[k] != 0.0) {
      throw InputError("one-hot entries must be 0 or 1");
    }
  }
  if (label < 0) throw InputError("one-hot vector has no hot entry");
  return evidential_loss(alpha, label, lambda_t);
}

Eigen::VectorXd evidential_loss_gradient(const Eigen::VectorXd& alpha, int label,
                                         double lambda_t) {
  require_label(label, alpha.size());
  const double strength = alpha.sum();
  const Eigen::VectorXd prob = alpha / strength;

  // d/d alpha_j of sum_k (y_k - p_k)^2 with dp_k/dalpha_j = (delta_kj - p_k) / S.
  Eigen::VectorXd residual = prob;
  residual[label] -= 1.0;
  const double coupling = residual.dot(prob);
  Eigen::VectorXd grad = (2.0 / strength) * (residual.array() - coupling).matrix();

  if (lambda_t != 0.0) {
    Eigen::VectorXd alpha_tilde = alpha;
    alpha_tilde[label] = 1.0;
    Eigen::VectorXd kl_grad = kl_dirichlet_to_uniform_gradient(alpha_tilde);
    kl_grad[label] = 0.0;  // alpha_tilde does not depend on the true-class alpha
    grad += lambda_t * kl_grad;
  }
  return grad;
}

double anneal_lambda(int round_t, int total_rounds, double lambda_max) {
  if (total_rounds <= 0) return lambda_max;
  const double t = std::clamp(round_t, 0, total_rounds);
  return lambda_max * std::min(1.0, 2.0 * t / static_cast<double>(total_rounds));
}

}  // namespace evtrust
