#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

namespace ldpbo {

struct PosteriorPoint {
  double mean = 0.0;
  double variance = 0.0;
};

/// Clamps roundoff-level negative variances to zero. Values below -1e-12 are
/// treated as a PSD violation and raise NumericError with `index`.
double clamp_variance(double variance, std::size_t index);

/// Exact GP posterior over a finite domain, conditioned on (domain index,
/// reward) observations with Gaussian-likelihood regularizer lambda.
///
/// The lower Cholesky factor of (K_t + lambda I) is extended by one row per
/// observation; posterior mean and variance over the whole domain are updated
/// in O(t n) per observation. Every `refactor_every` observations the factor
/// and all cached solves are rebuilt from scratch to cap drift.
class ExactPosterior {
 public:
  ExactPosterior(std::shared_ptr<const Eigen::MatrixXd> domain_gram, double lambda,
                 std::size_t refactor_every = 256);

  void append(std::size_t index, double reward);

  std::size_t size() const { return visited_.size(); }
  double lambda() const { return lambda_; }
  std::size_t domain_size() const { return static_cast<std::size_t>(gram_->rows()); }

  PosteriorPoint posterior(std::size_t index) const;

  /// Posterior means over every domain point.
  const Eigen::VectorXd& means() const { return mean_; }
  /// Clamped posterior variances over every domain point.
  Eigen::VectorXd variances() const;
  /// Clamped posterior standard deviations over every domain point.
  Eigen::VectorXd std_devs() const;

  /// 1/2 ln det(I + K_t / lambda) on the visited points.
  double realized_info_gain() const;

  /// Copy of the current t x t lower factor.
  Eigen::MatrixXd factor() const;

  const std::vector<std::size_t>& visited() const { return visited_; }
  const std::vector<double>& rewards() const { return rewards_; }

 private:
  void refactor();
  void ensure_capacity(std::size_t t);

  std::shared_ptr<const Eigen::MatrixXd> gram_;
  double lambda_;
  std::size_t refactor_every_;

  std::vector<std::size_t> visited_;
  std::vector<double> rewards_;

  Eigen::MatrixXd chol_;       // capacity x capacity, top-left t x t is valid
  Eigen::MatrixXd whitened_;   // capacity x n, rows 0..t-1 hold L^{-1} K(visited, :)
  Eigen::VectorXd whitened_y_; // capacity, head t holds L^{-1} y
  Eigen::VectorXd mean_;
  Eigen::VectorXd variance_;   // unclamped
  double log_det_ = 0.0;       // sum of ln L_ii
};

/// Smallest index maximizing mu + beta * sigma. NaN inputs raise NumericError
/// carrying the offending index.
std::size_t ucb_argmax(std::span<const double> mu, std::span<const double> sigma, double beta);

inline std::size_t ucb_argmax(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma, double beta) {
  return ucb_argmax(std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())),
                    std::span<const double>(sigma.data(), static_cast<std::size_t>(sigma.size())),
                    beta);
}

}  // namespace ldpbo
