#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldpbo/environments.hpp"
#include "ldpbo/gp.hpp"
#include "ldpbo/nystrom.hpp"
#include "ldpbo/privacy.hpp"
#include "ldpbo/rng.hpp"

namespace ldpbo {

enum class Variant { GpUcb, Tgp, Ata, Moma };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

/// How TGP-UCB picks its raw-reward truncation point b_t.
enum class TruncationRule {
  Laplace,     // B + R + L ln t (L = 0 without a curator)
  SubWeibull,  // B + R + scale (ln t)^theta
  Moment,      // v^{1/(1+alpha)} t^{1/(2(1+alpha))} (finite (1+alpha)-th moment)
};

std::string to_string(TruncationRule r);
TruncationRule parse_truncation(const std::string& text);

struct AlgoConfig {
  Variant variant = Variant::Tgp;
  std::size_t horizon = 1000;
  double lambda = 1.0;
  double B = 1.0;
  double R = 1.0;
  double delta = 0.1;
  double approx_epsilon = 0.5;
  double beta_scale = 1.0;
  double alpha = 1.0;
  double v = 2.0;
  double c = 1.0;
  std::optional<CuratorConfig> privacy;
  TruncationRule truncation = TruncationRule::Laplace;
  double subweibull_theta = 1.0;
  double subweibull_scale = 1.0;
  double pinv_threshold = 1e-10;
  std::size_t refactor_every = 256;
};

/// Applies the private-reward moment constants when `privacy` is set:
/// v = B^2 + R^2 + 8(B+R)^2/eps^2, c = R^2 + 8(B+R)^2/eps^2, alpha = 1.
/// Validates every field; throws ConfigError listing the first violation.
AlgoConfig resolve(AlgoConfig config);

/// (1 + approx_epsilon) / (1 - approx_epsilon).
double nystrom_rho(double approx_epsilon);
/// 6 rho ln(4T/delta) / approx_epsilon^2.
double oversampling_q(double approx_epsilon, std::size_t horizon, double delta);
/// ceil(24 ln(4 e T / delta)).
std::size_t moma_replays(std::size_t horizon, double delta);

struct DerivedConstants {
  double laplace_scale = 0.0;
  double v = 0.0;
  double c = 0.0;
  double alpha = 1.0;
  double rho = 0.0;
  double q = 0.0;
  std::size_t k = 0;  // replays per epoch (MoMA)
  std::size_t N = 0;  // epochs (MoMA)
};

DerivedConstants derive_constants(const AlgoConfig& config);

/// B + R + L ln(max(t, 1)).
double tgp_laplace_threshold(double B, double R, double laplace_scale, double t);
/// y if |y| <= b, else 0.
double truncate_reward(double y, double b);
/// base + scale (ln max(t, 2))^theta.
double tgp_subweibull_threshold(double theta, double base, double scale, double t);

/// Index of the estimator whose median distance to the others is smallest.
struct MomSelection {
  std::vector<double> scores;
  std::size_t best = 0;
};

/// `distances` is a symmetric k x k matrix; scores[j] is the median of
/// row j without the diagonal (mean of the two central values for an even
/// count). Ties go to the lowest index. Throws ConfigError for k < 2.
MomSelection median_of_means_select(const Eigen::MatrixXd& distances);

/// Pairwise ||theta_j - theta_s||_V for the columns of `thetas`.
Eigen::MatrixXd weighted_distances(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& V);

struct Decision {
  std::size_t arm = 0;
  double beta = 0.0;
};

/// Common surface of the optimizer loops. One decision plays `replays()`
/// rounds of the same arm; `learn` receives the released reward of each.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual Variant variant() const = 0;
  virtual std::size_t replays() const { return 1; }
  virtual Decision decide() = 0;
  /// Returns the reward value actually fed to the estimator for each replay
  /// (post-truncation for TGP; the released value otherwise).
  virtual std::vector<double> learn(std::span<const double> released) = 0;
  /// Current surrogate mean and variance over the domain.
  virtual Eigen::VectorXd means() const = 0;
  virtual Eigen::VectorXd variances() const = 0;
};

/// GP-UCB baseline with beta_t = B + R sqrt(2 (gamma_{t-1} + ln(1/delta))).
class GpUcb final : public Optimizer {
 public:
  GpUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram);
  Variant variant() const override { return Variant::GpUcb; }
  Decision decide() override;
  std::vector<double> learn(std::span<const double> released) override;
  Eigen::VectorXd means() const override { return posterior_.means(); }
  Eigen::VectorXd variances() const override { return posterior_.variances(); }
  double beta(std::size_t t) const;
  const ExactPosterior& posterior() const { return posterior_; }

 private:
  AlgoConfig config_;
  ExactPosterior posterior_;
  std::size_t pending_arm_ = 0;
};

/// Truncated GP-UCB: exact GP on rewards zeroed when |y| > b_t.
class TgpUcb final : public Optimizer {
 public:
  TgpUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram);
  Variant variant() const override { return Variant::Tgp; }
  Decision decide() override;
  std::vector<double> learn(std::span<const double> released) override;
  Eigen::VectorXd means() const override { return posterior_.means(); }
  Eigen::VectorXd variances() const override { return posterior_.variances(); }

  /// Truncation point b_t (b_0 = B + R under the Laplace rule).
  double threshold(std::size_t t) const;
  /// beta_t, using gamma_{t-1} of the current posterior; call with t = size() + 1.
  double beta(std::size_t t) const;
  std::size_t truncated_count() const { return truncated_; }
  const ExactPosterior& posterior() const { return posterior_; }

 private:
  double bias_term(std::size_t t) const;

  AlgoConfig config_;
  double laplace_scale_ = 0.0;
  ExactPosterior posterior_;
  std::size_t pending_arm_ = 0;
  std::size_t truncated_ = 0;
  double moment_bias_sq_ = 0.0;  // sum over tau < t of (v / b_tau^alpha)^2
};

/// Result of the feature-adaptive truncation at one round.
struct AtaEstimate {
  Eigen::VectorXd theta;
  Eigen::VectorXd truncated_projections;  // r_hat
  double threshold = 0.0;                 // b
};

/// theta = V^{-1/2} r_hat, r_hat_i = sum_tau u_{i,tau} y_tau 1{|u_{i,tau} y_tau| <= b},
/// where u_i^T are the rows of V^{-1/2} Phi^T and b = sqrt(v / ln(4 m T / delta)).
AtaEstimate ata_estimate(const ApproxState& state, std::span<const std::size_t> history,
                         std::span<const double> rewards, double v, std::size_t horizon, double delta);

/// Adaptively truncated approximate GP-UCB.
class AtaUcb final : public Optimizer {
 public:
  AtaUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram, std::uint64_t seed);
  Variant variant() const override { return Variant::Ata; }
  Decision decide() override;
  std::vector<double> learn(std::span<const double> released) override;
  Eigen::VectorXd means() const override { return means_; }
  Eigen::VectorXd variances() const override { return variances_; }

  /// beta as a function of the embedding dimension m (floored at 1).
  double beta(std::size_t m) const;
  std::size_t dimension() const { return dimension_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const std::vector<std::size_t>& history() const { return history_; }
  const std::vector<double>& rewards() const { return rewards_; }
  /// Variance snapshot used for the latest dictionary draw.
  const std::vector<double>& last_snapshot() const { return snapshot_; }
  const std::optional<ApproxState>& state() const { return state_; }

 private:
  AlgoConfig config_;
  std::shared_ptr<const Eigen::MatrixXd> gram_;
  Rng rng_;
  double q_;
  std::vector<std::size_t> history_;
  std::vector<double> rewards_;
  std::vector<double> snapshot_;
  std::optional<ApproxState> state_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd means_;
  Eigen::VectorXd variances_;
  std::size_t dimension_ = 1;  // m_0 = 1
  std::size_t pending_arm_ = 0;
};

/// Median-of-means approximate GP-UCB: one arm per epoch, played k times.
class MomaUcb final : public Optimizer {
 public:
  MomaUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram, std::uint64_t seed);
  Variant variant() const override { return Variant::Moma; }
  std::size_t replays() const override { return k_; }
  Decision decide() override;
  std::vector<double> learn(std::span<const double> released) override;
  Eigen::VectorXd means() const override { return means_; }
  Eigen::VectorXd variances() const override { return variances_; }

  std::size_t epochs() const { return k_ == 0 ? 0 : config_.horizon / k_; }
  /// beta_{n+1} as a function of (m_n, n).
  double beta(std::size_t m, std::size_t n) const;
  std::size_t dimension() const { return dimension_; }
  std::size_t selected() const { return selected_; }
  const Eigen::MatrixXd& estimates() const { return estimates_; }
  const std::optional<ApproxState>& state() const { return state_; }

 private:
  AlgoConfig config_;
  std::shared_ptr<const Eigen::MatrixXd> gram_;
  Rng rng_;
  double q_;
  std::size_t k_;
  std::vector<std::size_t> points_;
  std::vector<std::vector<double>> table_;  // table_[n][j] = y_{n,j}
  std::optional<ApproxState> state_;
  Eigen::MatrixXd estimates_;  // m x k
  std::size_t selected_ = 0;
  Eigen::VectorXd means_;
  Eigen::VectorXd variances_;
  std::size_t dimension_ = 1;
  std::size_t pending_arm_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const AlgoConfig& config, std::shared_ptr<const Eigen::MatrixXd> gram,
                                          std::uint64_t seed);

/// One row of a regret trace.
struct RoundResult {
  std::size_t round = 0;
  std::size_t arm = 0;
  double raw_reward = 0.0;
  double private_reward = 0.0;
  double truncated_reward = 0.0;
  double beta = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
};

/// Routes every raw reward through the curator before the optimizer sees it.
class LdpStepper {
 public:
  LdpStepper(Optimizer& optimizer, RewardCurator& curator) : optimizer_(optimizer), curator_(curator) {}

  /// Makes one decision and plays it `replays()` times, appending one
  /// RoundResult per play to `trace`.
  void step(const Environment& env, Rng& env_rng, Rng& curator_rng, std::vector<RoundResult>& trace);

 private:
  Optimizer& optimizer_;
  RewardCurator& curator_;
};

/// Runs decisions until the next one would exceed `horizon` rounds.
std::vector<RoundResult> run_trial(const Environment& env, Optimizer& optimizer, RewardCurator& curator,
                                   std::size_t horizon, Rng& env_rng, Rng& curator_rng);

}  // namespace ldpbo
