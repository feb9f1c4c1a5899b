#include "ldpbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ldpbo/csv.hpp"
#include "ldpbo/errors.hpp"

namespace ldpbo {

namespace {

KernelSpec kernel_from(const EnvSpec& env) {
  if (env.kernel == "matern") return Matern{env.lengthscale, env.nu};
  return SquaredExponential{env.lengthscale};
}

NoiseModel noise_from(const EnvSpec& env) {
  if (env.noise == "uniform") return UniformNoise{env.noise_bound};
  if (env.noise == "student_t") return StudentTNoise{env.student_dof};
  return NoNoise{};
}

RewardCurator curator_for(const ExperimentConfig& config, const AlgoConfig& algo) {
  switch (config.privacy.mode) {
    case PrivacyMode::None: return RewardCurator::identity();
    case PrivacyMode::Pure: return RewardCurator::pure(*algo.privacy);
    case PrivacyMode::Approximate: return RewardCurator::approximate(*algo.privacy);
  }
  return RewardCurator::identity();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

Environment build_environment(const ExperimentConfig& config, std::size_t trial) {
  const auto& spec = config.env;
  switch (spec.type) {
    case EnvType::Synthetic: {
      auto domain = std::make_shared<const Domain>(Domain::uniform_grid(spec.grid_points, spec.dim));
      Rng rng(derive_seed(config.seed, "env", spec.redraw_per_trial ? trial : 0));
      Environment env = gen_synthetic(rng, kernel_from(spec), std::move(domain), spec.support_points, noise_from(spec));
      env.name = "synthetic";
      return env;
    }
    case EnvType::Dataset:
      return load_dataset_env(spec.train_csv, spec.test_csv);
    case EnvType::Hard: {
      auto domain = std::make_shared<const Domain>(Domain::uniform_grid(spec.grid_points, spec.dim));
      HardInstanceParams params;
      params.delta = spec.hard_delta;
      params.dim = spec.dim;
      params.kernel = kernel_from(spec);
      params.B = spec.hard_B;
      params.alpha = spec.hard_alpha;
      params.v = spec.hard_v;
      params.quadrature_nodes = spec.hard_nodes;
      params.matern_constant = spec.hard_matern_constant;
      const HardInstance instance = build_hard_instance(params, std::move(domain));
      const std::size_t m =
          spec.hard_function < 0 ? trial % instance.size() : static_cast<std::size_t>(spec.hard_function);
      if (m >= instance.size()) {
        throw ConfigError("env.hard.function " + std::to_string(m) + " out of range (family has " +
                          std::to_string(instance.size()) + " functions)");
      }
      return instance.environment(m);
    }
  }
  throw ConfigError("unknown environment type");
}

AlgoConfig algo_config_for(const ExperimentConfig& config, const AlgoEntry& entry, const Environment& env) {
  AlgoConfig a;
  a.variant = entry.variant;
  a.horizon = config.horizon;
  a.lambda = config.lambda;
  a.B = env.B;
  a.R = env.R;
  a.delta = config.delta;
  a.approx_epsilon = config.approx_epsilon;
  a.beta_scale = entry.beta_scale;
  a.alpha = config.env.type == EnvType::Hard ? config.env.hard_alpha : config.alpha;
  a.v = env.v;
  a.c = env.c;
  switch (config.privacy.mode) {
    case PrivacyMode::None:
      break;
    case PrivacyMode::Pure:
      a.privacy = CuratorConfig(config.privacy.epsilon, env.B, env.R);
      break;
    case PrivacyMode::Approximate: {
      const SubWeibullClip clip{config.privacy.subweibull_theta, config.privacy.subweibull_k1,
                                static_cast<double>(config.horizon), config.privacy.delta};
      a.R = effective_noise_bound(clip);
      a.privacy = CuratorConfig(config.privacy.epsilon, env.B, a.R);
      break;
    }
  }
  if (entry.truncation_set) {
    a.truncation = entry.truncation;
  } else {
    a.truncation = std::isfinite(a.R) ? TruncationRule::Laplace : TruncationRule::Moment;
  }
  return resolve(a);
}

TrialOutcome run_trial_outcome(const ExperimentConfig& config, std::size_t algo_index, std::size_t trial,
                               const Environment& env) {
  const AlgoEntry& entry = config.algos.at(algo_index);
  TrialOutcome outcome;
  outcome.algo = to_string(entry.variant);
  outcome.trial = trial;
  try {
    const AlgoConfig algo = algo_config_for(config, entry, env);
    outcome.constants.B = algo.B;
    outcome.constants.R = algo.R;
    outcome.constants.derived = derive_constants(algo);
    Rng env_rng(derive_seed(config.seed, outcome.algo, trial, 1));
    Rng curator_rng(derive_seed(config.seed, outcome.algo, trial, 2));
    const std::uint64_t algo_seed = derive_seed(config.seed, outcome.algo, trial, 3);
    RewardCurator curator = curator_for(config, algo);
    auto optimizer = make_optimizer(algo, env.gram, algo_seed);
    outcome.trace = run_trial(env, *optimizer, curator, config.horizon, env_rng, curator_rng);
    outcome.clip_events = curator.clip_events();
  } catch (const Error& e) {
    outcome.trace.clear();
    outcome.error = e.what();
  }
  return outcome;
}

SummaryStats summarize(const std::vector<TrialOutcome>& outcomes, const std::vector<std::string>& algo_order) {
  SummaryStats stats;
  for (const auto& algo : algo_order) {
    std::vector<const std::vector<RoundResult>*> series;
    for (const auto& o : outcomes) {
      if (o.algo == algo && !o.error) series.push_back(&o.trace);
    }
    stats.completed.emplace_back(algo, series.size());
    if (series.empty()) continue;
    std::size_t length = series.front()->size();
    for (const auto* s : series) length = std::min(length, s->size());
    const double n = static_cast<double>(series.size());
    for (std::size_t r = 0; r < length; ++r) {
      double mean = 0.0;
      for (const auto* s : series) mean += (*s)[r].cum_regret;
      mean /= n;
      double ss = 0.0;
      for (const auto* s : series) {
        const double d = (*s)[r].cum_regret - mean;
        ss += d * d;
      }
      const double sd = series.size() < 2 ? 0.0 : std::sqrt(ss / (n - 1.0));
      stats.rows.push_back(SummaryRow{r + 1, algo, mean, sd});
    }
  }
  return stats;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  std::vector<Environment> envs;
  envs.reserve(config.trials);
  for (std::size_t t = 0; t < config.trials; ++t) envs.push_back(build_environment(config, t));

  const std::size_t n_algos = config.algos.size();
  const std::size_t jobs = n_algos * config.trials;
  std::vector<TrialOutcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t a = job / config.trials;
      const std::size_t t = job % config.trials;
      outcomes[job] = run_trial_outcome(config, a, t, envs[t]);
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(std::max<std::size_t>(config.workers, 1), jobs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  result.outcomes = std::move(outcomes);
  std::vector<std::string> order;
  for (const auto& a : config.algos) order.push_back(to_string(a.variant));
  result.summary = summarize(result.outcomes, order);
  persist(result, config, config.out);
  return result;
}

void persist(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  if (config.write_traces) {
    for (const auto& o : result.outcomes) {
      if (o.error) continue;
      const auto path = dir / ("trace_" + o.algo + "_" + std::to_string(o.trial) + ".csv");
      auto out = open_output(path);
      out << kTraceHeader << '\n';
      for (const auto& r : o.trace) {
        out << r.round << ',' << r.arm << ',' << format_double(r.raw_reward) << ',' << format_double(r.private_reward)
            << ',' << format_double(r.truncated_reward) << ',' << format_double(r.beta) << ','
            << format_double(r.inst_regret) << ',' << format_double(r.cum_regret) << '\n';
      }
      finish_output(out, path);
    }
  }

  {
    const auto path = dir / "summary.csv";
    auto out = open_output(path);
    out << kSummaryHeader << '\n';
    for (const auto& row : result.summary.rows) {
      out << row.round << ',' << row.algo << ',' << format_double(row.mean_cum_regret) << ','
          << format_double(row.std_cum_regret) << '\n';
    }
    finish_output(out, path);
  }

  nlohmann::ordered_json doc;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [key, value] : to_key_values(config)) cfg[key] = value;
  doc["config"] = cfg;
  nlohmann::ordered_json derived = nlohmann::ordered_json::object();
  nlohmann::ordered_json trials = nlohmann::ordered_json::object();
  for (const auto& [algo, completed] : result.summary.completed) {
    nlohmann::ordered_json per_trial = nlohmann::ordered_json::array();
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& o : result.outcomes) {
      if (o.algo != algo) continue;
      const auto& d = o.constants.derived;
      per_trial.push_back({{"trial", o.trial},
                           {"B", number_or_null(o.constants.B)},
                           {"R", number_or_null(o.constants.R)},
                           {"L", number_or_null(d.laplace_scale)},
                           {"v", number_or_null(d.v)},
                           {"c", number_or_null(d.c)},
                           {"alpha", number_or_null(d.alpha)},
                           {"q", number_or_null(d.q)},
                           {"k", d.k},
                           {"N", d.N},
                           {"clip_events", o.clip_events}});
      if (o.error) failures.push_back({{"trial", o.trial}, {"error", *o.error}});
    }
    derived[algo] = per_trial;
    trials[algo] = {{"completed", completed}, {"failed", failures}};
  }
  doc["derived"] = derived;
  doc["trials"] = trials;

  const auto path = dir / "run.json";
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  finish_output(out, path);
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path.string() + ": empty file (missing header)");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  const std::vector<std::string> expected = split(kSummaryHeader);
  const auto header = split(line);
  for (const auto& col : expected) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw IngestionError(path.string() + ": missing column '" + col + "'");
    }
  }
  for (const auto& col : header) {
    if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
      throw IngestionError(path.string() + ": unexpected column '" + col + "'");
    }
  }
  if (header != expected) throw IngestionError(path.string() + ": columns must appear as " + kSummaryHeader);

  std::vector<SummaryRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw IngestionError(path.string() + ": line " + std::to_string(number) + " has " +
                           std::to_string(cells.size()) + " cells, expected " + std::to_string(expected.size()));
    }
    SummaryRow row;
    auto parse = [&](std::size_t col, auto& dest) {
      std::istringstream cell(cells[col]);
      cell >> dest;
      if (!cell || !cell.eof()) {
        throw IngestionError(path.string() + ": line " + std::to_string(number) + ", column '" + expected[col] +
                             "': not a number: '" + cells[col] + "'");
      }
    };
    parse(0, row.round);
    row.algo = cells[1];
    parse(2, row.mean_cum_regret);
    parse(3, row.std_cum_regret);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ldpbo
