#include "ldpbo/gp.hpp"

#include <cmath>
#include <limits>

#include "ldpbo/errors.hpp"

namespace ldpbo {

double clamp_variance(double variance, std::size_t index) {
  if (std::isnan(variance)) throw NumericError("posterior variance is NaN", index);
  if (variance >= 0.0) return variance;
  if (variance >= -1e-12) return 0.0;
  throw NumericError("posterior variance " + std::to_string(variance) + " is negative beyond roundoff",
                     index);
}

ExactPosterior::ExactPosterior(std::shared_ptr<const Eigen::MatrixXd> domain_gram, double lambda,
                               std::size_t refactor_every)
    : gram_(std::move(domain_gram)), lambda_(lambda), refactor_every_(refactor_every) {
  if (!gram_ || gram_->rows() == 0 || gram_->rows() != gram_->cols()) {
    throw ConfigError("posterior needs a square, non-empty domain Gram matrix");
  }
  if (!(lambda_ > 0.0)) throw ConfigError("lambda must be positive");
  if (refactor_every_ == 0) refactor_every_ = 1;
  mean_ = Eigen::VectorXd::Zero(gram_->rows());
  variance_ = gram_->diagonal();
}

void ExactPosterior::ensure_capacity(std::size_t t) {
  const auto cap = static_cast<std::size_t>(chol_.rows());
  if (t <= cap) return;
  const std::size_t new_cap = std::max<std::size_t>(t, std::max<std::size_t>(16, 2 * cap));
  const auto n = gram_->rows();
  const auto old = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(new_cap), static_cast<Eigen::Index>(new_cap));
  Eigen::MatrixXd whitened(static_cast<Eigen::Index>(new_cap), n);
  Eigen::VectorXd wy(static_cast<Eigen::Index>(new_cap));
  if (old > 0) {
    chol.topLeftCorner(old, old) = chol_.topLeftCorner(old, old);
    whitened.topRows(old) = whitened_.topRows(old);
    wy.head(old) = whitened_y_.head(old);
  }
  chol_.swap(chol);
  whitened_.swap(whitened);
  whitened_y_.swap(wy);
}

void ExactPosterior::append(std::size_t index, double reward) {
  const auto n = gram_->rows();
  if (index >= static_cast<std::size_t>(n)) throw ConfigError("observation index outside the domain");
  if (!std::isfinite(reward)) throw NumericError("observed reward is not finite", size());

  const auto t = static_cast<Eigen::Index>(size());
  ensure_capacity(size() + 1);
  visited_.push_back(index);
  rewards_.push_back(reward);

  if (size() % refactor_every_ == 0) {
    refactor();
    return;
  }

  const auto idx = static_cast<Eigen::Index>(index);
  // l = L^{-1} k_t(x_new) is column idx of the whitened cross-covariance.
  const Eigen::VectorXd l = whitened_.topRows(t).col(idx);
  const double pivot_sq = (*gram_)(idx, idx) + lambda_ - l.squaredNorm();
  if (!(pivot_sq > 0.0)) throw NumericError("Cholesky extension hit a non-positive pivot", size() - 1);
  const double pivot = std::sqrt(pivot_sq);

  chol_.row(t).head(t) = l.transpose();
  chol_(t, t) = pivot;
  log_det_ += std::log(pivot);

  // New whitened row: (K(x_new, :) - l^T V) / pivot.
  Eigen::RowVectorXd row = gram_->row(idx);
  if (t > 0) row.noalias() -= l.transpose() * whitened_.topRows(t);
  row /= pivot;
  whitened_.row(t) = row;

  const double wy = (reward - (t > 0 ? l.dot(whitened_y_.head(t)) : 0.0)) / pivot;
  whitened_y_(t) = wy;

  mean_ += wy * row.transpose();
  variance_ -= row.transpose().cwiseAbs2();
  for (Eigen::Index i = 0; i < n; ++i) clamp_variance(variance_(i), static_cast<std::size_t>(i));
}

void ExactPosterior::refactor() {
  const auto t = static_cast<Eigen::Index>(size());
  const auto n = gram_->rows();
  Eigen::MatrixXd system(t, t);
  Eigen::MatrixXd cross(t, n);
  Eigen::VectorXd y(t);
  for (Eigen::Index a = 0; a < t; ++a) {
    const auto ia = static_cast<Eigen::Index>(visited_[static_cast<std::size_t>(a)]);
    cross.row(a) = gram_->row(ia);
    y(a) = rewards_[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double v = (*gram_)(ia, static_cast<Eigen::Index>(visited_[static_cast<std::size_t>(b)]));
      system(a, b) = v;
      system(b, a) = v;
    }
    system(a, a) += lambda_;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    // Locate the failing pivot with an unblocked pass.
    Eigen::MatrixXd a = system;
    for (Eigen::Index j = 0; j < t; ++j) {
      double d = a(j, j) - a.row(j).head(j).squaredNorm();
      if (!(d > 0.0)) throw NumericError("Cholesky refactorization hit a non-positive pivot", static_cast<std::size_t>(j));
      d = std::sqrt(d);
      a(j, j) = d;
      for (Eigen::Index i = j + 1; i < t; ++i) a(i, j) = (a(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / d;
    }
    throw NumericError("Cholesky refactorization failed", 0);
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  chol_.topLeftCorner(t, t) = lower;
  whitened_.topRows(t) = llt.matrixL().solve(cross);
  whitened_y_.head(t) = llt.matrixL().solve(y);

  log_det_ = lower.diagonal().array().log().sum();
  mean_.noalias() = whitened_.topRows(t).transpose() * whitened_y_.head(t);
  variance_ = gram_->diagonal() - whitened_.topRows(t).colwise().squaredNorm().transpose();
  for (Eigen::Index i = 0; i < n; ++i) clamp_variance(variance_(i), static_cast<std::size_t>(i));
}

PosteriorPoint ExactPosterior::posterior(std::size_t index) const {
  if (index >= domain_size()) throw ConfigError("posterior query outside the domain");
  const auto i = static_cast<Eigen::Index>(index);
  return {mean_(i), clamp_variance(variance_(i), index)};
}

Eigen::VectorXd ExactPosterior::variances() const {
  Eigen::VectorXd out(variance_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = clamp_variance(variance_(i), static_cast<std::size_t>(i));
  return out;
}

Eigen::VectorXd ExactPosterior::std_devs() const { return variances().cwiseSqrt(); }

double ExactPosterior::realized_info_gain() const {
  // ln det(K + lambda I) = 2 sum ln L_ii, and det(I + K/lambda) = det(K + lambda I) / lambda^t.
  return log_det_ - 0.5 * static_cast<double>(size()) * std::log(lambda_);
}

Eigen::MatrixXd ExactPosterior::factor() const {
  const auto t = static_cast<Eigen::Index>(size());
  return chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>();
}

std::size_t ucb_argmax(std::span<const double> mu, std::span<const double> sigma, double beta) {
  if (mu.size() != sigma.size()) throw ConfigError("ucb_argmax: mu and sigma sizes differ");
  if (mu.empty()) throw ConfigError("ucb_argmax: empty domain");
  if (!std::isfinite(beta)) throw NumericError("ucb_argmax: beta is not finite", 0);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (std::isnan(mu[i]) || std::isnan(sigma[i])) throw NumericError("ucb_argmax: NaN input", i);
    const double value = mu[i] + beta * sigma[i];
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

}  // namespace ldpbo
