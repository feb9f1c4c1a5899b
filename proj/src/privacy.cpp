#include "ldpbo/privacy.hpp"

#include <algorithm>
#include <cmath>

#include "ldpbo/errors.hpp"

namespace ldpbo {

CuratorConfig::CuratorConfig(double epsilon, double reward_bound, double noise_bound)
    : epsilon_(epsilon), reward_bound_(reward_bound), noise_bound_(noise_bound) {
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw ConfigError("privacy epsilon must be positive and finite");
  if (!(reward_bound_ >= 0.0) || !std::isfinite(reward_bound_)) throw ConfigError("reward bound B must be finite and non-negative");
  if (!(noise_bound_ >= 0.0) || !std::isfinite(noise_bound_)) throw ConfigError("noise bound R must be finite and non-negative");
  if (!(magnitude_bound() > 0.0)) throw ConfigError("B + R must be positive");
}

double sample_laplace(double scale, Rng& rng) {
  const double u = rng.uniform_open() - 0.5;
  const double sign = u < 0.0 ? -1.0 : (u > 0.0 ? 1.0 : 0.0);
  return -scale * sign * std::log(1.0 - 2.0 * std::abs(u));
}

namespace {

void check_sensitivity(const CuratorConfig& config, double y) {
  if (!(std::abs(y) <= config.magnitude_bound())) {
    throw SensitivityError("reward " + std::to_string(y) + " exceeds the curator bound B + R = " +
                           std::to_string(config.magnitude_bound()));
  }
}

}  // namespace

double ctl(const CuratorConfig& config, double y, Rng& rng) {
  check_sensitivity(config, y);
  return y + sample_laplace(config.scale(), rng);
}

double ldp_density_ratio_bound(const CuratorConfig& config, double y, double y2) {
  check_sensitivity(config, y);
  check_sensitivity(config, y2);
  return std::exp(std::abs(y - y2) / config.scale());
}

double effective_noise_bound(const SubWeibullClip& clip) {
  if (!(clip.horizon >= 1.0)) throw ConfigError("sub-Weibull horizon must be at least 1");
  if (!(clip.delta > 0.0 && clip.delta < 1.0)) throw ConfigError("sub-Weibull delta must lie in (0,1)");
  if (!(clip.theta > 0.0) || !(clip.k1 > 0.0)) throw ConfigError("sub-Weibull theta and K1 must be positive");
  return clip.k1 * std::pow(std::log(clip.horizon / clip.delta), clip.theta);
}

std::string to_string(PrivacyMode mode) {
  switch (mode) {
    case PrivacyMode::None: return "none";
    case PrivacyMode::Pure: return "pure";
    case PrivacyMode::Approximate: return "approximate";
  }
  return "none";
}

PrivacyMode parse_privacy_mode(const std::string& text) {
  if (text == "none") return PrivacyMode::None;
  if (text == "pure") return PrivacyMode::Pure;
  if (text == "approximate") return PrivacyMode::Approximate;
  throw ConfigError("unknown privacy.mode '" + text + "' (expected none, pure or approximate)");
}

RewardCurator RewardCurator::identity() { return RewardCurator{}; }

RewardCurator RewardCurator::pure(CuratorConfig config) {
  RewardCurator c;
  c.mode_ = PrivacyMode::Pure;
  c.config_ = config;
  return c;
}

RewardCurator RewardCurator::approximate(CuratorConfig config) {
  RewardCurator c;
  c.mode_ = PrivacyMode::Approximate;
  c.config_ = config;
  return c;
}

RewardCurator RewardCurator::custom(ReleaseFn fn) {
  RewardCurator c;
  c.custom_ = std::move(fn);
  return c;
}

double RewardCurator::release(double raw, Rng& rng) {
  if (custom_) return custom_(raw, rng);
  if (!config_) return raw;
  double y = raw;
  if (mode_ == PrivacyMode::Approximate) {
    const double bound = config_->magnitude_bound();
    if (std::abs(y) > bound) {
      ++clip_events_;
      y = std::clamp(y, -bound, bound);
    }
  }
  return ctl(*config_, y, rng);
}

}  // namespace ldpbo
