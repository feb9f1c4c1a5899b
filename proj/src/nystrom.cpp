#include "ldpbo/nystrom.hpp"

#include <algorithm>
#include <cmath>

#include "ldpbo/errors.hpp"

namespace ldpbo {

Dictionary build_dictionary(std::span<const double> sigma_tilde_sq, double q, Rng& rng) {
  Dictionary dict;
  dict.probabilities.reserve(sigma_tilde_sq.size());
  for (std::size_t i = 0; i < sigma_tilde_sq.size(); ++i) {
    const double p = std::clamp(q * sigma_tilde_sq[i], 0.0, 1.0);
    dict.probabilities.push_back(p);
    const double u = rng.uniform_open();
    if (u < p) dict.members.push_back(i);
  }
  return dict;
}

NystromEmbedding NystromEmbedding::empty(const Eigen::MatrixXd& domain_gram) {
  NystromEmbedding e;
  e.features_ = Eigen::MatrixXd::Zero(domain_gram.rows(), 0);
  e.prior_var_ = domain_gram.diagonal();
  return e;
}

NystromEmbedding NystromEmbedding::build(std::span<const std::size_t> dictionary,
                                         const Eigen::MatrixXd& domain_gram, double pinv_threshold) {
  if (dictionary.empty()) throw ConfigError("Nystrom embedding needs a non-empty dictionary");
  const auto n = domain_gram.rows();
  const auto m = static_cast<Eigen::Index>(dictionary.size());
  for (auto idx : dictionary) {
    if (idx >= static_cast<std::size_t>(n)) throw ConfigError("dictionary index outside the domain");
  }

  Eigen::MatrixXd kdd(m, m);
  Eigen::MatrixXd kdx(m, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto ia = static_cast<Eigen::Index>(dictionary[static_cast<std::size_t>(a)]);
    kdx.row(a) = domain_gram.row(ia);
    for (Eigen::Index b = 0; b < m; ++b) kdd(a, b) = domain_gram(ia, static_cast<Eigen::Index>(dictionary[static_cast<std::size_t>(b)]));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kdd);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the dictionary kernel failed", 0);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double cutoff = pinv_threshold * values(m - 1);
  Eigen::Index first_kept = 0;
  while (first_kept < m && !(values(first_kept) > cutoff)) ++first_kept;
  const Eigen::Index rank = m - first_kept;

  // phi(x) = Lambda_r^{-1/2} U_r^T k_D(x); inner products equal
  // k_D(x)^T (K_D^{1/2})^+ (K_D^{1/2})^+ k_D(y).
  NystromEmbedding e;
  e.prior_var_ = domain_gram.diagonal();
  if (rank == 0) {
    e.features_ = Eigen::MatrixXd::Zero(n, 0);
    return e;
  }
  const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(rank);
  const Eigen::VectorXd scale = values.tail(rank).cwiseSqrt().cwiseInverse();
  e.features_ = (scale.asDiagonal() * basis.transpose() * kdx).transpose();
  return e;
}

ApproxState::ApproxState(NystromEmbedding embedding, std::span<const std::size_t> history, double lambda)
    : embedding_(std::move(embedding)), history_(history.begin(), history.end()), lambda_(lambda) {
  if (!(lambda_ > 0.0)) throw ConfigError("lambda must be positive");
  const auto m = static_cast<Eigen::Index>(embedding_.dimension());
  const auto n = static_cast<Eigen::Index>(embedding_.domain_size());
  const auto& phi = embedding_.features();

  // Phi^T Phi over the history equals sum over domain points of count * phi phi^T.
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  for (auto idx : history_) {
    if (idx >= static_cast<std::size_t>(n)) throw ConfigError("history index outside the domain");
    counts(static_cast<Eigen::Index>(idx)) += 1.0;
  }
  design_ = phi.transpose() * counts.asDiagonal() * phi;
  design_ += lambda_ * Eigen::MatrixXd::Identity(m, m);
  design_ = 0.5 * (design_ + design_.transpose());

  if (m > 0) {
    llt_.compute(design_);
    if (llt_.info() != Eigen::Success) throw NumericError("feature design matrix is not positive definite", 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(design_);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of the feature design failed", 0);
    inv_sqrt_ = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
  } else {
    inv_sqrt_.resize(0, 0);
  }

  variances_.resize(n);
  const Eigen::MatrixXd solved = m > 0 ? Eigen::MatrixXd(llt_.solve(phi.transpose())) : Eigen::MatrixXd(0, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = embedding_.prior_variances()(i);
    if (m > 0) v += -phi.row(i).squaredNorm() + lambda_ * phi.row(i).dot(solved.col(i));
    variances_(i) = clamp_variance(v, static_cast<std::size_t>(i));
  }
}

Eigen::MatrixXd ApproxState::history_features() const {
  const auto m = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(history_.size()), m);
  for (std::size_t t = 0; t < history_.size(); ++t) {
    out.row(static_cast<Eigen::Index>(t)) = embedding_.features().row(static_cast<Eigen::Index>(history_[t]));
  }
  return out;
}

Eigen::MatrixXd ApproxState::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != static_cast<Eigen::Index>(dimension())) throw ConfigError("solve: dimension mismatch");
  if (dimension() == 0) return Eigen::MatrixXd(0, rhs.cols());
  return llt_.solve(rhs);
}

PosteriorPoint ApproxState::posterior(const Eigen::VectorXd& theta, std::size_t index) const {
  if (static_cast<std::size_t>(theta.size()) != dimension()) {
    throw ConfigError("theta has dimension " + std::to_string(theta.size()) + ", embedding has " +
                      std::to_string(dimension()));
  }
  if (index >= embedding_.domain_size()) throw ConfigError("posterior query outside the domain");
  const auto i = static_cast<Eigen::Index>(index);
  const double mu = dimension() == 0 ? 0.0 : embedding_.features().row(i).dot(theta);
  return {mu, variances_(i)};
}

Eigen::VectorXd ApproxState::means(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dimension()) throw ConfigError("theta dimension mismatch");
  if (dimension() == 0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embedding_.domain_size()));
  return embedding_.features() * theta;
}

Eigen::VectorXd ApproxState::variances() const { return variances_; }

}  // namespace ldpbo
