#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "ldpbo/rng.hpp"

namespace ldpbo {

/// Laplace curator parameters. The scale 2(B+R)/epsilon is always derived
/// from (epsilon, B, R).
class CuratorConfig {
 public:
  CuratorConfig(double epsilon, double reward_bound, double noise_bound);

  double epsilon() const { return epsilon_; }
  double reward_bound() const { return reward_bound_; }
  double noise_bound() const { return noise_bound_; }
  /// Largest legal |y|: B + R.
  double magnitude_bound() const { return reward_bound_ + noise_bound_; }
  /// Sensitivity 2(B + R).
  double sensitivity() const { return 2.0 * magnitude_bound(); }
  /// Laplace scale 2(B + R) / epsilon.
  double scale() const { return sensitivity() / epsilon_; }

 private:
  double epsilon_;
  double reward_bound_;
  double noise_bound_;
};

/// Laplace(scale) by inverse CDF: -scale * sgn(u - 1/2) * ln(1 - 2|u - 1/2|).
double sample_laplace(double scale, Rng& rng);

/// Convert-to-Laplace: y + Laplace(scale). Throws SensitivityError if |y| > B + R.
double ctl(const CuratorConfig& config, double y, Rng& rng);

/// sup_z l(z - y) / l(z - y2) = exp(|y - y2| / scale). Throws SensitivityError
/// when either input exceeds B + R.
double ldp_density_ratio_bound(const CuratorConfig& config, double y, double y2);

/// Tail parameters for the unbounded-noise mode.
struct SubWeibullClip {
  double theta = 0.5;
  double k1 = 1.0;
  double horizon = 1.0;
  double delta = 0.1;
};

/// K1 * (ln(T / delta))^theta, used as R for (epsilon, delta)-LDP.
double effective_noise_bound(const SubWeibullClip& clip);

enum class PrivacyMode { None, Pure, Approximate };

std::string to_string(PrivacyMode mode);
PrivacyMode parse_privacy_mode(const std::string& text);

/// The reward path between the environment and the learner.
///
/// * identity: the learner sees the raw reward.
/// * pure: Laplace curator; out-of-bound rewards are a hard error.
/// * approximate: raw rewards are clipped to +/-(B + R_eff) before the
///   Laplace curator; each clip is counted.
/// * custom: arbitrary release function, used for stubs.
class RewardCurator {
 public:
  using ReleaseFn = std::function<double(double, Rng&)>;

  static RewardCurator identity();
  static RewardCurator pure(CuratorConfig config);
  static RewardCurator approximate(CuratorConfig config);
  static RewardCurator custom(ReleaseFn fn);

  double release(double raw, Rng& rng);

  bool is_private() const { return config_.has_value(); }
  const std::optional<CuratorConfig>& config() const { return config_; }
  PrivacyMode mode() const { return mode_; }
  std::size_t clip_events() const { return clip_events_; }

 private:
  PrivacyMode mode_ = PrivacyMode::None;
  std::optional<CuratorConfig> config_;
  ReleaseFn custom_;
  std::size_t clip_events_ = 0;
};

}  // namespace ldpbo
