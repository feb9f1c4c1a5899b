#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ldpbo/gp.hpp"
#include "ldpbo/rng.hpp"

namespace ldpbo {

/// Outcome of Bernoulli dictionary sampling over a list of candidates.
struct Dictionary {
  /// Positions (into the candidate list) that were included, ascending.
  std::vector<std::size_t> members;
  /// Inclusion probability min{q * sigma_tilde_sq, 1} of every candidate.
  std::vector<double> probabilities;
};

/// Includes candidate i independently with probability min{q * sigma_tilde_sq[i], 1}.
/// Consumes exactly one uniform draw per candidate.
Dictionary build_dictionary(std::span<const double> sigma_tilde_sq, double q, Rng& rng);

/// Finite feature map phi(x) = (K_D^{1/2})^+ k_D(x), materialized for every
/// domain point. The pseudo-inverse discards eigenvalues of K_D below
/// `pinv_threshold * max eigenvalue`; the embedding dimension is the number
/// of eigenvalues kept.
class NystromEmbedding {
 public:
  NystromEmbedding() = default;

  /// `dictionary` holds domain indices (duplicates allowed).
  static NystromEmbedding build(std::span<const std::size_t> dictionary,
                                const Eigen::MatrixXd& domain_gram, double pinv_threshold = 1e-10);

  /// Embedding with no features (empty dictionary).
  static NystromEmbedding empty(const Eigen::MatrixXd& domain_gram);

  std::size_t dimension() const { return static_cast<std::size_t>(features_.cols()); }
  std::size_t domain_size() const { return static_cast<std::size_t>(features_.rows()); }
  /// Row i is phi(x_i)^T.
  const Eigen::MatrixXd& features() const { return features_; }
  Eigen::VectorXd feature(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
  /// k(x, x) for every domain point.
  const Eigen::VectorXd& prior_variances() const { return prior_var_; }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd prior_var_;
};

/// Regularized feature-space design V = Phi^T Phi + lambda I built from the
/// embedded history, with the approximate posterior of the feature model.
class ApproxState {
 public:
  /// `history` lists the domain index of each observation, in order.
  ApproxState(NystromEmbedding embedding, std::span<const std::size_t> history, double lambda);

  std::size_t dimension() const { return embedding_.dimension(); }
  double lambda() const { return lambda_; }
  const NystromEmbedding& embedding() const { return embedding_; }
  /// Rows phi(x_tau)^T for each history entry.
  Eigen::MatrixXd history_features() const;
  const Eigen::MatrixXd& design() const { return design_; }

  /// V^{-1} rhs.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  /// Symmetric V^{-1/2}.
  const Eigen::MatrixXd& inverse_sqrt() const { return inv_sqrt_; }

  /// (mu, sigma^2) with mu = phi(x)^T theta and
  /// sigma^2 = k(x,x) - phi^T phi + lambda phi^T V^{-1} phi, clamped at 0.
  PosteriorPoint posterior(const Eigen::VectorXd& theta, std::size_t index) const;
  Eigen::VectorXd means(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd variances() const;

 private:
  NystromEmbedding embedding_;
  std::vector<std::size_t> history_;
  double lambda_;
  Eigen::MatrixXd design_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd inv_sqrt_;
  Eigen::VectorXd variances_;
};

}  // namespace ldpbo
