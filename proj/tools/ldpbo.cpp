#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ldpbo/config.hpp"
#include "ldpbo/errors.hpp"
#include "ldpbo/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string seed;
  std::string trials;
  std::string out;

  ldpbo::KeyValues as_keys() const {
    ldpbo::KeyValues kv;
    if (!seed.empty()) kv["seed"] = seed;
    if (!trials.empty()) kv["trials"] = trials;
    if (!out.empty()) kv["out"] = out;
    return kv;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--trials", o.trials, "Number of trials (overrides the config)");
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
}

int run(const std::string& path, const Overrides& o) {
  ldpbo::ExperimentConfig config;
  try {
    config = ldpbo::load_experiment(path, o.as_keys());
  } catch (const ldpbo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  try {
    const auto result = ldpbo::run_experiment(config);
    std::size_t failed = 0;
    for (const auto& outcome : result.outcomes) {
      if (outcome.error) {
        ++failed;
        std::cerr << "warning: " << outcome.algo << " trial " << outcome.trial << " failed: " << *outcome.error
                  << '\n';
      }
    }
    for (const auto& [algo, completed] : result.summary.completed) {
      double final_mean = 0.0;
      double final_std = 0.0;
      for (const auto& row : result.summary.rows) {
        if (row.algo == algo) {
          final_mean = row.mean_cum_regret;
          final_std = row.std_cum_regret;
        }
      }
      std::cout << algo << ": " << completed << "/" << config.trials << " trials, final cumulative regret "
                << final_mean << " +/- " << final_std << '\n';
    }
    std::cout << "wrote " << config.out << '\n';
    return failed == result.outcomes.size() && !result.outcomes.empty() ? kExitRuntime : kExitOk;
  } catch (const ldpbo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int validate(const std::string& path, const Overrides& o) {
  try {
    const auto config = ldpbo::load_experiment(path, o.as_keys());
    std::cout << "ok: " << config.algos.size() << " algorithm(s), T = " << config.horizon << ", "
              << config.trials << " trial(s)\n";
    return kExitOk;
  } catch (const ldpbo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernelized bandit benchmarks under local differential privacy"};
  app.require_subcommand(1);

  Overrides run_overrides;
  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write traces, summary.csv and run.json");
  run_cmd->add_option("config", run_path, "Config file (key = value, or a run.json)")->required();
  add_overrides(run_cmd, run_overrides);

  Overrides validate_overrides;
  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config and report every problem");
  validate_cmd->add_option("config", validate_path, "Config file")->required();
  add_overrides(validate_cmd, validate_overrides);

  auto* list_cmd = app.add_subcommand("list-algos", "List the available algorithms");

  std::string template_name;
  auto* gen_cmd = app.add_subcommand("gen-config", "Print a config template");
  gen_cmd->add_option("template", template_name, "Template name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (*run_cmd) return run(run_path, run_overrides);
  if (*validate_cmd) return validate(validate_path, validate_overrides);
  if (*list_cmd) {
    std::cout << "gpucb  GP-UCB baseline (bounded noise, no truncation)\n"
                 "tgp    truncated GP-UCB\n"
                 "ata    adaptively truncated approximate GP-UCB (Nystrom features)\n"
                 "moma   median-of-means approximate GP-UCB (Nystrom features)\n";
    return kExitOk;
  }
  if (*gen_cmd) {
    try {
      std::cout << ldpbo::config_template(template_name);
      return kExitOk;
    } catch (const ldpbo::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitValidation;
    }
  }
  return kExitValidation;
}
