#include "ldpbo/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldpbo/errors.hpp"

namespace ldpbo {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::GpUcb: return "gpucb";
    case Variant::Tgp: return "tgp";
    case Variant::Ata: return "ata";
    case Variant::Moma: return "moma";
  }
  return "unknown";
}

Variant parse_variant(const std::string& text) {
  if (text == "gpucb") return Variant::GpUcb;
  if (text == "tgp") return Variant::Tgp;
  if (text == "ata") return Variant::Ata;
  if (text == "moma") return Variant::Moma;
  throw ConfigError("unknown algorithm '" + text + "' (expected gpucb, tgp, ata or moma)");
}

std::string to_string(TruncationRule r) {
  switch (r) {
    case TruncationRule::Laplace: return "laplace";
    case TruncationRule::SubWeibull: return "subweibull";
    case TruncationRule::Moment: return "moment";
  }
  return "unknown";
}

TruncationRule parse_truncation(const std::string& text) {
  if (text == "laplace") return TruncationRule::Laplace;
  if (text == "subweibull") return TruncationRule::SubWeibull;
  if (text == "moment") return TruncationRule::Moment;
  throw ConfigError("unknown truncation rule '" + text + "' (expected laplace, subweibull or moment)");
}

AlgoConfig resolve(AlgoConfig config) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(config.horizon >= 1, "horizon T must be at least 1");
  require(config.lambda > 0.0 && std::isfinite(config.lambda), "lambda must be positive");
  require(config.B >= 0.0 && std::isfinite(config.B), "B must be finite and non-negative");
  require(config.R >= 0.0, "R must be non-negative");
  require(config.delta > 0.0 && config.delta <= 1.0, "delta must lie in (0,1]");
  require(config.approx_epsilon > 0.0 && config.approx_epsilon < 1.0, "approx_epsilon must lie in (0,1)");
  require(config.beta_scale > 0.0 && std::isfinite(config.beta_scale), "beta_scale must be positive");
  require(config.alpha > 0.0 && config.alpha <= 1.0, "alpha must lie in (0,1]");
  require(config.pinv_threshold > 0.0 && config.pinv_threshold < 1.0, "pinv_threshold must lie in (0,1)");

  if (config.privacy) {
    const auto& p = *config.privacy;
    require(std::abs(p.reward_bound() - config.B) <= 1e-12 * std::max(1.0, config.B) &&
                std::abs(p.noise_bound() - config.R) <= 1e-12 * std::max(1.0, config.R),
            "curator bounds (B, R) must match the algorithm's (B, R)");
    const double br2 = (config.B + config.R) * (config.B + config.R);
    const double eps2 = p.epsilon() * p.epsilon();
    config.v = config.B * config.B + config.R * config.R + 8.0 * br2 / eps2;
    config.c = config.R * config.R + 8.0 * br2 / eps2;
    config.alpha = 1.0;
  }
  require(config.v > 0.0 && std::isfinite(config.v), "moment bound v must be positive and finite");
  require(config.c >= 0.0 && std::isfinite(config.c), "moment bound c must be finite and non-negative");
  if (config.variant == Variant::Tgp) {
    if (config.truncation == TruncationRule::Laplace) {
      require(std::isfinite(config.R), "the laplace truncation rule needs a finite R");
    }
    if (config.truncation == TruncationRule::SubWeibull) {
      require(config.subweibull_theta > 0.0 && config.subweibull_scale > 0.0,
              "sub-Weibull truncation needs positive theta and scale");
      require(std::isfinite(config.R), "sub-Weibull truncation needs a finite R");
    }
  }
  if (config.variant == Variant::GpUcb) require(std::isfinite(config.R), "GP-UCB needs a finite noise bound R");
  return config;
}

double nystrom_rho(double approx_epsilon) { return (1.0 + approx_epsilon) / (1.0 - approx_epsilon); }

double oversampling_q(double approx_epsilon, std::size_t horizon, double delta) {
  return 6.0 * nystrom_rho(approx_epsilon) * std::log(4.0 * static_cast<double>(horizon) / delta) /
         (approx_epsilon * approx_epsilon);
}

std::size_t moma_replays(std::size_t horizon, double delta) {
  return static_cast<std::size_t>(std::ceil(24.0 * std::log(4.0 * M_E * static_cast<double>(horizon) / delta)));
}

DerivedConstants derive_constants(const AlgoConfig& raw) {
  const AlgoConfig config = resolve(raw);
  DerivedConstants d;
  d.laplace_scale = config.privacy ? config.privacy->scale() : 0.0;
  d.v = config.v;
  d.c = config.c;
  d.alpha = config.alpha;
  d.rho = nystrom_rho(config.approx_epsilon);
  d.q = oversampling_q(config.approx_epsilon, config.horizon, config.delta);
  d.k = moma_replays(config.horizon, config.delta);
  d.N = config.horizon / d.k;
  return d;
}

double tgp_laplace_threshold(double B, double R, double laplace_scale, double t) {
  return B + R + laplace_scale * std::log(std::max(t, 1.0));
}

double truncate_reward(double y, double b) { return std::abs(y) <= b ? y : 0.0; }

double tgp_subweibull_threshold(double theta, double base, double scale, double t) {
  if (!(theta > 0.0)) throw ConfigError("sub-Weibull theta must be positive");
  return base + scale * std::pow(std::log(std::max(t, 2.0)), theta);
}

MomSelection median_of_means_select(const Eigen::MatrixXd& distances) {
  const auto k = distances.rows();
  if (k != distances.cols()) throw ConfigError("distance matrix must be square");
  if (k < 2) throw ConfigError("median-of-means needs at least 2 estimators");
  MomSelection sel;
  sel.scores.resize(static_cast<std::size_t>(k));
  std::vector<double> others;
  others.reserve(static_cast<std::size_t>(k - 1));
  for (Eigen::Index j = 0; j < k; ++j) {
    others.clear();
    for (Eigen::Index s = 0; s < k; ++s) {
      if (s != j) others.push_back(distances(j, s));
    }
    const std::size_t mid = others.size() / 2;
    std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(mid), others.end());
    double median = others[mid];
    if (others.size() % 2 == 0) {
      const double lower = *std::max_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(mid));
      median = 0.5 * (lower + median);
    }
    sel.scores[static_cast<std::size_t>(j)] = median;
  }
  sel.best = static_cast<std::size_t>(std::min_element(sel.scores.begin(), sel.scores.end()) - sel.scores.begin());
  return sel;
}

Eigen::MatrixXd weighted_distances(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& V) {
  const Eigen::MatrixXd gram = thetas.transpose() * V * thetas;
  const auto k = gram.rows();
  Eigen::MatrixXd d(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index s = 0; s < k; ++s) {
      d(j, s) = j == s ? 0.0 : std::sqrt(std::max(0.0, gram(j, j) + gram(s, s) - 2.0 * gram(j, s)));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// GP-UCB

GpUcb::GpUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram)
    : config_(resolve(std::move(config))), posterior_(std::move(gram), config_.lambda, config_.refactor_every) {}

double GpUcb::beta(std::size_t) const {
  const double gamma = posterior_.realized_info_gain();
  return config_.beta_scale * (config_.B + config_.R * std::sqrt(2.0 * (gamma + std::log(1.0 / config_.delta))));
}

Decision GpUcb::decide() {
  const double b = beta(posterior_.size() + 1);
  pending_arm_ = ucb_argmax(posterior_.means(), posterior_.std_devs(), b);
  return {pending_arm_, b};
}

std::vector<double> GpUcb::learn(std::span<const double> released) {
  for (double y : released) posterior_.append(pending_arm_, y);
  return {released.begin(), released.end()};
}

// ---------------------------------------------------------------------------
// TGP-UCB

TgpUcb::TgpUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram)
    : config_(resolve(std::move(config))), posterior_(std::move(gram), config_.lambda, config_.refactor_every) {
  laplace_scale_ = config_.privacy ? config_.privacy->scale() : 0.0;
}

double TgpUcb::threshold(std::size_t t) const {
  switch (config_.truncation) {
    case TruncationRule::Laplace:
      return tgp_laplace_threshold(config_.B, config_.R, laplace_scale_, static_cast<double>(t));
    case TruncationRule::SubWeibull:
      return tgp_subweibull_threshold(config_.subweibull_theta, config_.B + config_.R, config_.subweibull_scale,
                                      static_cast<double>(t));
    case TruncationRule::Moment: {
      const double a = config_.alpha;
      return std::pow(config_.v, 1.0 / (1.0 + a)) *
             std::pow(static_cast<double>(std::max<std::size_t>(t, 1)), 1.0 / (2.0 * (1.0 + a)));
    }
  }
  return 0.0;
}

double TgpUcb::bias_term(std::size_t t) const {
  const double log_term = std::log(static_cast<double>(std::max<std::size_t>(t - 1, 1))) + 1.0;
  switch (config_.truncation) {
    case TruncationRule::Laplace: {
      const double K = config_.B * config_.B + config_.R * config_.R + 2.0 * laplace_scale_ * laplace_scale_;
      return std::sqrt(K * log_term);
    }
    case TruncationRule::SubWeibull:
      return std::sqrt(config_.v * log_term);
    case TruncationRule::Moment:
      return std::sqrt(moment_bias_sq_);
  }
  return 0.0;
}

double TgpUcb::beta(std::size_t t) const {
  if (t == 0) t = 1;
  const double gamma = posterior_.realized_info_gain();
  const double inv_sqrt_lambda = 1.0 / std::sqrt(config_.lambda);
  const double confidence = 2.0 * std::sqrt(2.0) * inv_sqrt_lambda * threshold(t - 1) *
                            std::sqrt(gamma + std::log(1.0 / config_.delta));
  return config_.beta_scale * (config_.B + confidence + inv_sqrt_lambda * bias_term(t));
}

Decision TgpUcb::decide() {
  const double b = beta(posterior_.size() + 1);
  pending_arm_ = ucb_argmax(posterior_.means(), posterior_.std_devs(), b);
  return {pending_arm_, b};
}

std::vector<double> TgpUcb::learn(std::span<const double> released) {
  std::vector<double> used;
  used.reserve(released.size());
  for (double y : released) {
    const std::size_t t = posterior_.size() + 1;
    const double b = threshold(t);
    const double kept = truncate_reward(y, b);
    if (std::abs(y) > b) ++truncated_;
    if (config_.truncation == TruncationRule::Moment) {
      const double term = config_.v / std::pow(b, config_.alpha);
      moment_bias_sq_ += term * term;
    }
    posterior_.append(pending_arm_, kept);
    used.push_back(kept);
  }
  return used;
}

// ---------------------------------------------------------------------------
// ATA-GP-UCB

namespace {

std::vector<std::size_t> unique_indices(const Dictionary& dict, std::span<const std::size_t> candidates) {
  std::vector<std::size_t> out;
  out.reserve(dict.members.size());
  for (auto pos : dict.members) out.push_back(candidates[pos]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> variance_snapshot(const Eigen::VectorXd& variances, std::span<const std::size_t> points) {
  std::vector<double> snap;
  snap.reserve(points.size());
  for (auto idx : points) snap.push_back(variances(static_cast<Eigen::Index>(idx)));
  return snap;
}

}  // namespace

AtaEstimate ata_estimate(const ApproxState& state, std::span<const std::size_t> history,
                         std::span<const double> rewards, double v, std::size_t horizon, double delta) {
  if (history.size() != rewards.size()) throw ConfigError("history and reward lengths differ");
  const auto m = static_cast<Eigen::Index>(state.dimension());
  AtaEstimate est;
  est.theta = Eigen::VectorXd::Zero(m);
  est.truncated_projections = Eigen::VectorXd::Zero(m);
  if (m == 0) return est;
  est.threshold = std::sqrt(v / std::log(4.0 * static_cast<double>(m) * static_cast<double>(horizon) / delta));

  // Column x of `projections` is V^{-1/2} phi(x); row i restricted to the
  // history gives u_i.
  const Eigen::MatrixXd projections = state.inverse_sqrt() * state.embedding().features().transpose();
  for (std::size_t tau = 0; tau < history.size(); ++tau) {
    const auto col = static_cast<Eigen::Index>(history[tau]);
    const double y = rewards[tau];
    for (Eigen::Index i = 0; i < m; ++i) {
      const double term = projections(i, col) * y;
      if (std::abs(term) <= est.threshold) est.truncated_projections(i) += term;
    }
  }
  est.theta = state.inverse_sqrt() * est.truncated_projections;
  return est;
}

AtaUcb::AtaUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram, std::uint64_t seed)
    : config_(resolve(std::move(config))), gram_(std::move(gram)), rng_(seed) {
  if (!gram_) throw ConfigError("ATA needs a domain Gram matrix");
  q_ = oversampling_q(config_.approx_epsilon, config_.horizon, config_.delta);
  means_ = Eigen::VectorXd::Zero(gram_->rows());
  variances_ = gram_->diagonal();
}

double AtaUcb::beta(std::size_t m) const {
  const double md = static_cast<double>(std::max<std::size_t>(m, 1));
  const double log_term = std::log(4.0 * md * static_cast<double>(config_.horizon) / config_.delta);
  return config_.beta_scale *
         (config_.B * (1.0 + 1.0 / std::sqrt(1.0 - config_.approx_epsilon)) +
          4.0 * std::sqrt(log_term * config_.v * md / config_.lambda));
}

Decision AtaUcb::decide() {
  const double b = beta(dimension_);
  pending_arm_ = ucb_argmax(means_, variances_.cwiseSqrt(), b);
  return {pending_arm_, b};
}

std::vector<double> AtaUcb::learn(std::span<const double> released) {
  for (double y : released) {
    history_.push_back(pending_arm_);
    rewards_.push_back(y);

    snapshot_ = variance_snapshot(variances_, history_);
    const Dictionary dict = build_dictionary(snapshot_, q_, rng_);
    const auto members = unique_indices(dict, history_);

    NystromEmbedding embedding = members.empty()
                                     ? NystromEmbedding::empty(*gram_)
                                     : NystromEmbedding::build(members, *gram_, config_.pinv_threshold);
    state_.emplace(std::move(embedding), history_, config_.lambda);
    dimension_ = state_->dimension();
    if (dimension_ == 0) {
      // Prior-only round.
      theta_.resize(0);
      means_ = Eigen::VectorXd::Zero(gram_->rows());
      variances_ = gram_->diagonal();
      continue;
    }
    const AtaEstimate est = ata_estimate(*state_, history_, rewards_, config_.v, config_.horizon, config_.delta);
    theta_ = est.theta;
    means_ = state_->means(theta_);
    variances_ = state_->variances();
  }
  return {released.begin(), released.end()};
}

// ---------------------------------------------------------------------------
// MoMA-GP-UCB

MomaUcb::MomaUcb(AlgoConfig config, std::shared_ptr<const Eigen::MatrixXd> gram, std::uint64_t seed)
    : config_(resolve(std::move(config))), gram_(std::move(gram)), rng_(seed) {
  if (!gram_) throw ConfigError("MoMA needs a domain Gram matrix");
  q_ = oversampling_q(config_.approx_epsilon, config_.horizon, config_.delta);
  k_ = moma_replays(config_.horizon, config_.delta);
  if (k_ < 2) throw ConfigError("MoMA needs at least 2 replays per epoch");
  means_ = Eigen::VectorXd::Zero(gram_->rows());
  variances_ = gram_->diagonal();
}

double MomaUcb::beta(std::size_t m, std::size_t n) const {
  const double a = config_.alpha;
  const double spread = std::pow(9.0 * static_cast<double>(m) * config_.c, 1.0 / (1.0 + a)) *
                        std::pow(static_cast<double>(n), (1.0 - a) / (2.0 * (1.0 + a)));
  return config_.beta_scale * (config_.B * (1.0 + 1.0 / std::sqrt(1.0 - config_.approx_epsilon)) +
                               3.0 * spread / std::sqrt(config_.lambda));
}

Decision MomaUcb::decide() {
  const double b = beta(dimension_, points_.size());
  pending_arm_ = ucb_argmax(means_, variances_.cwiseSqrt(), b);
  return {pending_arm_, b};
}

std::vector<double> MomaUcb::learn(std::span<const double> released) {
  if (released.size() != k_) {
    throw ConfigError("MoMA epoch expects " + std::to_string(k_) + " rewards, got " + std::to_string(released.size()));
  }
  points_.push_back(pending_arm_);
  table_.emplace_back(released.begin(), released.end());

  const auto snapshot = variance_snapshot(variances_, points_);
  const Dictionary dict = build_dictionary(snapshot, q_, rng_);
  const auto members = unique_indices(dict, points_);
  NystromEmbedding embedding = members.empty()
                                   ? NystromEmbedding::empty(*gram_)
                                   : NystromEmbedding::build(members, *gram_, config_.pinv_threshold);
  state_.emplace(std::move(embedding), points_, config_.lambda);
  dimension_ = state_->dimension();
  if (dimension_ == 0) {
    estimates_.resize(0, static_cast<Eigen::Index>(k_));
    selected_ = 0;
    means_ = Eigen::VectorXd::Zero(gram_->rows());
    variances_ = gram_->diagonal();
    return {released.begin(), released.end()};
  }

  const auto n = static_cast<Eigen::Index>(points_.size());
  const auto k = static_cast<Eigen::Index>(k_);
  Eigen::MatrixXd Y(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) Y(i, j) = table_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::MatrixXd phi = state_->history_features();
  estimates_ = state_->solve(phi.transpose() * Y);
  const MomSelection sel = median_of_means_select(weighted_distances(estimates_, state_->design()));
  selected_ = sel.best;
  means_ = state_->means(estimates_.col(static_cast<Eigen::Index>(selected_)));
  variances_ = state_->variances();
  return {released.begin(), released.end()};
}

std::unique_ptr<Optimizer> make_optimizer(const AlgoConfig& config, std::shared_ptr<const Eigen::MatrixXd> gram,
                                          std::uint64_t seed) {
  switch (config.variant) {
    case Variant::GpUcb: return std::make_unique<GpUcb>(config, std::move(gram));
    case Variant::Tgp: return std::make_unique<TgpUcb>(config, std::move(gram));
    case Variant::Ata: return std::make_unique<AtaUcb>(config, std::move(gram), seed);
    case Variant::Moma: return std::make_unique<MomaUcb>(config, std::move(gram), seed);
  }
  throw ConfigError("unknown variant");
}

// ---------------------------------------------------------------------------
// Driver

void LdpStepper::step(const Environment& env, Rng& env_rng, Rng& curator_rng, std::vector<RoundResult>& trace) {
  const Decision decision = optimizer_.decide();
  const std::size_t plays = optimizer_.replays();
  std::vector<double> raw(plays);
  std::vector<double> released(plays);
  for (std::size_t r = 0; r < plays; ++r) {
    raw[r] = sample_reward(env, decision.arm, env_rng);
    released[r] = curator_.release(raw[r], curator_rng);
  }
  const std::vector<double> used = optimizer_.learn(released);
  const double inst = env.regret(decision.arm);
  double cum = trace.empty() ? 0.0 : trace.back().cum_regret;
  for (std::size_t r = 0; r < plays; ++r) {
    cum += inst;
    trace.push_back(RoundResult{trace.size() + 1, decision.arm, raw[r], released[r], used[r], decision.beta, inst, cum});
  }
}

std::vector<RoundResult> run_trial(const Environment& env, Optimizer& optimizer, RewardCurator& curator,
                                   std::size_t horizon, Rng& env_rng, Rng& curator_rng) {
  std::vector<RoundResult> trace;
  trace.reserve(horizon);
  LdpStepper stepper(optimizer, curator);
  while (trace.size() + optimizer.replays() <= horizon) stepper.step(env, env_rng, curator_rng, trace);
  return trace;
}

}  // namespace ldpbo
