#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ldpbo/algorithms.hpp"
#include "ldpbo/privacy.hpp"

namespace ldpbo {

/// Flat `key.path = value` pairs.
using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Throws ConfigError naming the line on malformed input or duplicate keys.
KeyValues parse_key_values(const std::string& text);

/// Reads a key-value file, or a run.json echo (detected by a leading `{`).
KeyValues load_key_values(const std::filesystem::path& path);

enum class EnvType { Synthetic, Dataset, Hard };

struct EnvSpec {
  EnvType type = EnvType::Synthetic;
  std::string kernel = "se";  // se | matern
  double lengthscale = 0.2;
  double nu = 2.5;
  std::size_t grid_points = 100;
  std::size_t dim = 1;
  std::size_t support_points = 100;
  std::string noise = "uniform";  // uniform | student_t | none
  double noise_bound = 1.0;
  double student_dof = 3.0;
  bool redraw_per_trial = true;
  std::string train_csv;
  std::string test_csv;
  double hard_delta = 0.05;
  double hard_v = 1.0;
  double hard_alpha = 1.0;
  double hard_B = 1.0;
  std::size_t hard_nodes = 64;
  double hard_matern_constant = 1.0;
  /// Function index of the family; negative selects trial mod M.
  long hard_function = -1;
};

struct AlgoEntry {
  Variant variant = Variant::Tgp;
  double beta_scale = 1.0;
  TruncationRule truncation = TruncationRule::Laplace;
  bool truncation_set = false;
};

struct PrivacySpec {
  PrivacyMode mode = PrivacyMode::None;
  double epsilon = 1.0;
  double delta = 0.1;
  double subweibull_theta = 0.5;
  double subweibull_k1 = 1.0;
};

struct ExperimentConfig {
  EnvSpec env;
  std::vector<AlgoEntry> algos;
  PrivacySpec privacy;
  double lambda = 1.0;
  double delta = 0.1;
  double approx_epsilon = 0.5;
  double alpha = 1.0;
  std::size_t horizon = 1000;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string out = "results";
  std::size_t workers = 1;
  bool write_traces = true;
};

/// Builds and validates a config. Every violation (unknown key, bad value,
/// inconsistent combination) is collected; throws ConfigError listing all.
ExperimentConfig parse_experiment(const KeyValues& values);

ExperimentConfig load_experiment(const std::filesystem::path& path, const KeyValues& overrides = {});

/// Fully resolved key-value echo, in a stable order.
std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& config);

/// Key-value text for a named template.
std::string config_template(const std::string& name);
std::vector<std::string> template_names();

std::string to_string(EnvType type);

}  // namespace ldpbo
