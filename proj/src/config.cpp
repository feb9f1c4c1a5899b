#include "ldpbo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ldpbo/csv.hpp"
#include "ldpbo/errors.hpp"

namespace ldpbo {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string json_scalar(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  if (value.is_number_float()) return format_double(value.get<double>());
  if (value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!joined.empty()) joined += ", ";
      joined += json_scalar(item);
    }
    return joined;
  }
  throw ConfigError("unsupported JSON value in config: " + value.dump());
}

void flatten(const nlohmann::json& node, const std::string& prefix, KeyValues& out) {
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, path, out);
    } else {
      out[path] = json_scalar(value);
    }
  }
}

/// Typed access to a KeyValues map that records every violation.
class Reader {
 public:
  explicit Reader(const KeyValues& values) : values_(values) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double real(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(out)) {
      fail(key + ": expected a number, got '" + s + "'");
      return fallback;
    }
    return out;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(key + ": expected a non-negative integer, got '" + s + "'");
      return fallback;
    }
    return out;
  }

  long integer(const std::string& key, long fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    long out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(key + ": expected an integer, got '" + s + "'");
      return fallback;
    }
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    const std::string s = text(key, fallback ? "true" : "false");
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    fail(key + ": expected true or false, got '" + s + "'");
    return fallback;
  }

  void fail(std::string message) { errors_.push_back(std::move(message)); }

  void check(bool ok, const std::string& message) {
    if (!ok) fail(message);
  }

  void reject_unknown() {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  const KeyValues& values_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

EnvType parse_env_type(Reader& r) {
  const std::string s = r.text("env.type", "synthetic");
  if (s == "synthetic") return EnvType::Synthetic;
  if (s == "dataset") return EnvType::Dataset;
  if (s == "hard") return EnvType::Hard;
  r.fail("env.type: expected synthetic, dataset or hard, got '" + s + "'");
  return EnvType::Synthetic;
}

}  // namespace

std::string to_string(EnvType type) {
  switch (type) {
    case EnvType::Synthetic: return "synthetic";
    case EnvType::Dataset: return "dataset";
    case EnvType::Hard: return "hard";
  }
  return "unknown";
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("config") || !doc["config"].is_object()) {
      throw ConfigError(path.string() + ": JSON config must hold a 'config' object");
    }
    KeyValues out;
    flatten(doc["config"], "", out);
    return out;
  }
  return parse_key_values(text);
}

ExperimentConfig parse_experiment(const KeyValues& values) {
  Reader r(values);
  ExperimentConfig cfg;

  auto& env = cfg.env;
  env.type = parse_env_type(r);
  env.kernel = r.text("env.kernel", env.kernel);
  env.lengthscale = r.real("env.lengthscale", env.lengthscale);
  env.nu = r.real("env.nu", env.nu);
  env.grid_points = r.count("env.grid_points", env.grid_points);
  env.dim = r.count("env.dim", env.dim);
  env.support_points = r.count("env.support_points", env.support_points);
  env.noise = r.text("env.noise", env.noise);
  env.noise_bound = r.real("env.noise_bound", env.noise_bound);
  env.student_dof = r.real("env.student_dof", env.student_dof);
  env.redraw_per_trial = r.flag("env.redraw_per_trial", env.redraw_per_trial);
  env.train_csv = r.text("env.train_csv", env.train_csv);
  env.test_csv = r.text("env.test_csv", env.test_csv);
  env.hard_delta = r.real("env.hard.delta", env.hard_delta);
  env.hard_v = r.real("env.hard.v", env.hard_v);
  env.hard_alpha = r.real("env.hard.alpha", env.hard_alpha);
  env.hard_B = r.real("env.hard.B", env.hard_B);
  env.hard_nodes = r.count("env.hard.quadrature_nodes", env.hard_nodes);
  env.hard_matern_constant = r.real("env.hard.matern_constant", env.hard_matern_constant);
  env.hard_function = r.integer("env.hard.function", env.hard_function);

  r.check(env.kernel == "se" || env.kernel == "matern", "env.kernel: expected se or matern, got '" + env.kernel + "'");
  r.check(env.lengthscale > 0.0, "env.lengthscale must be positive");
  r.check(env.nu > 0.0, "env.nu must be positive");
  r.check(env.grid_points >= 2, "env.grid_points must be at least 2");
  r.check(env.dim == 1 || env.dim == 2, "env.dim must be 1 or 2");
  r.check(env.noise == "uniform" || env.noise == "student_t" || env.noise == "none",
          "env.noise: expected uniform, student_t or none, got '" + env.noise + "'");
  r.check(env.noise_bound >= 0.0 && std::isfinite(env.noise_bound), "env.noise_bound must be finite and non-negative");
  r.check(env.student_dof > 2.0, "env.student_dof must exceed 2 (finite variance)");
  if (env.type == EnvType::Synthetic) r.check(env.support_points >= 1, "env.support_points must be at least 1");
  if (env.type == EnvType::Dataset) {
    r.check(!env.train_csv.empty(), "env.train_csv is required for a dataset environment");
    r.check(!env.test_csv.empty(), "env.test_csv is required for a dataset environment");
    for (const auto* p : {&env.train_csv, &env.test_csv}) {
      if (!p->empty() && !std::filesystem::exists(*p)) r.fail("dataset file not found: " + *p);
    }
  }
  if (env.type == EnvType::Hard) {
    r.check(env.hard_delta > 0.0, "env.hard.delta must be positive");
    r.check(env.hard_v > 0.0, "env.hard.v must be positive");
    r.check(env.hard_alpha > 0.0 && env.hard_alpha <= 1.0, "env.hard.alpha must lie in (0,1]");
    r.check(env.hard_B > 0.0, "env.hard.B must be positive");
    r.check(env.hard_nodes == 32 || env.hard_nodes == 64 || env.hard_nodes == 128,
            "env.hard.quadrature_nodes must be 32, 64 or 128");
    r.check(env.hard_delta <= 0.5 * std::pow(env.hard_v, 1.0 / (1.0 + env.hard_alpha)),
            "env.hard.delta must not exceed v^{1/(1+alpha)} / 2");
  }

  const std::string algo_list = r.text("algos", "");
  std::set<std::string> seen;
  const double default_scale = r.real("algo.beta_scale", 1.0);
  for (const auto& name : split_list(algo_list)) {
    AlgoEntry entry;
    try {
      entry.variant = parse_variant(name);
    } catch (const ConfigError& e) {
      r.fail(std::string("algos: ") + e.what());
      continue;
    }
    if (!seen.insert(name).second) {
      r.fail("algos: '" + name + "' listed twice");
      continue;
    }
    entry.beta_scale = r.real("algo." + name + ".beta_scale", default_scale);
    r.check(entry.beta_scale > 0.0, "algo." + name + ".beta_scale must be positive");
    cfg.algos.push_back(entry);
  }
  r.check(!cfg.algos.empty(), "algos must list at least one of gpucb, tgp, ata, moma");
  const std::string trunc_key = "algo.tgp.truncation";
  if (r.has(trunc_key)) {
    try {
      const auto rule = parse_truncation(r.text(trunc_key, ""));
      for (auto& a : cfg.algos) {
        a.truncation = rule;
        a.truncation_set = true;
      }
    } catch (const ConfigError& e) {
      r.fail(trunc_key + ": " + e.what());
    }
  }

  cfg.lambda = r.real("algo.lambda", cfg.lambda);
  cfg.delta = r.real("algo.delta", cfg.delta);
  cfg.approx_epsilon = r.real("algo.approx_epsilon", cfg.approx_epsilon);
  cfg.alpha = r.real("algo.alpha", cfg.alpha);
  r.check(cfg.lambda > 0.0, "algo.lambda must be positive");
  r.check(cfg.delta > 0.0 && cfg.delta <= 1.0, "algo.delta must lie in (0,1]");
  r.check(cfg.approx_epsilon > 0.0 && cfg.approx_epsilon < 1.0, "algo.approx_epsilon must lie in (0,1)");
  r.check(cfg.alpha > 0.0 && cfg.alpha <= 1.0, "algo.alpha must lie in (0,1]");

  auto& priv = cfg.privacy;
  const std::string mode = r.text("privacy.mode", "none");
  try {
    priv.mode = parse_privacy_mode(mode);
  } catch (const ConfigError& e) {
    r.fail(std::string("privacy.mode: ") + e.what());
  }
  priv.epsilon = r.real("privacy.epsilon", priv.epsilon);
  priv.delta = r.real("privacy.delta", priv.delta);
  priv.subweibull_theta = r.real("privacy.subweibull.theta", priv.subweibull_theta);
  priv.subweibull_k1 = r.real("privacy.subweibull.k1", priv.subweibull_k1);
  r.check(priv.epsilon > 0.0 && std::isfinite(priv.epsilon), "privacy.epsilon must be positive");
  r.check(priv.delta > 0.0 && priv.delta < 1.0, "privacy.delta must lie in (0,1)");
  r.check(priv.subweibull_theta > 0.0, "privacy.subweibull.theta must be positive");
  r.check(priv.subweibull_k1 > 0.0, "privacy.subweibull.k1 must be positive");
  if (priv.mode == PrivacyMode::Pure && env.type == EnvType::Synthetic && env.noise == "student_t") {
    r.fail("privacy.mode = pure needs bounded noise; use approximate for student_t noise");
  }

  cfg.horizon = r.count("horizon", cfg.horizon);
  cfg.trials = r.count("trials", cfg.trials);
  cfg.seed = r.count("seed", cfg.seed);
  cfg.out = r.text("out", cfg.out);
  cfg.workers = r.count("workers", cfg.workers);
  cfg.write_traces = r.flag("output.traces", cfg.write_traces);
  r.check(cfg.horizon >= 1, "horizon must be positive");
  r.check(cfg.trials >= 1, "trials must be positive");
  r.check(cfg.workers >= 1, "workers must be positive");
  r.check(!cfg.out.empty(), "out must name an output directory");
  for (const auto& a : cfg.algos) {
    if (a.variant == Variant::Moma) {
      const auto k = moma_replays(cfg.horizon, cfg.delta);
      r.check(k <= cfg.horizon, "horizon " + std::to_string(cfg.horizon) + " is shorter than one MoMA epoch (k = " +
                                    std::to_string(k) + ")");
    }
    if (a.variant == Variant::GpUcb && env.type == EnvType::Synthetic && env.noise == "student_t" &&
        priv.mode == PrivacyMode::None) {
      r.fail("gpucb needs bounded noise; student_t noise has no finite bound R");
    }
  }

  r.reject_unknown();
  if (!r.errors().empty()) {
    std::string message = "invalid configuration (" + std::to_string(r.errors().size()) + " problem" +
                          (r.errors().size() == 1 ? "" : "s") + "):";
    for (const auto& e : r.errors()) message += "\n  - " + e;
    throw ConfigError(message);
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const KeyValues& overrides) {
  KeyValues values = load_key_values(path);
  for (const auto& [k, v] : overrides) values[k] = v;
  return parse_experiment(values);
}

std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string key, std::string value) { out.emplace_back(std::move(key), std::move(value)); };
  auto num = [](double x) { return format_double(x); };
  const auto& env = cfg.env;

  add("env.type", to_string(env.type));
  add("env.kernel", env.kernel);
  add("env.lengthscale", num(env.lengthscale));
  add("env.nu", num(env.nu));
  add("env.grid_points", std::to_string(env.grid_points));
  add("env.dim", std::to_string(env.dim));
  add("env.support_points", std::to_string(env.support_points));
  add("env.noise", env.noise);
  add("env.noise_bound", num(env.noise_bound));
  add("env.student_dof", num(env.student_dof));
  add("env.redraw_per_trial", env.redraw_per_trial ? "true" : "false");
  if (env.type == EnvType::Dataset) {
    add("env.train_csv", env.train_csv);
    add("env.test_csv", env.test_csv);
  }
  if (env.type == EnvType::Hard) {
    add("env.hard.delta", num(env.hard_delta));
    add("env.hard.v", num(env.hard_v));
    add("env.hard.alpha", num(env.hard_alpha));
    add("env.hard.B", num(env.hard_B));
    add("env.hard.quadrature_nodes", std::to_string(env.hard_nodes));
    add("env.hard.matern_constant", num(env.hard_matern_constant));
    add("env.hard.function", std::to_string(env.hard_function));
  }

  std::string names;
  for (const auto& a : cfg.algos) names += (names.empty() ? "" : ", ") + to_string(a.variant);
  add("algos", names);
  for (const auto& a : cfg.algos) add("algo." + to_string(a.variant) + ".beta_scale", num(a.beta_scale));
  for (const auto& a : cfg.algos) {
    if (a.truncation_set) {
      add("algo.tgp.truncation", to_string(a.truncation));
      break;
    }
  }
  add("algo.lambda", num(cfg.lambda));
  add("algo.delta", num(cfg.delta));
  add("algo.approx_epsilon", num(cfg.approx_epsilon));
  add("algo.alpha", num(cfg.alpha));

  add("privacy.mode", to_string(cfg.privacy.mode));
  add("privacy.epsilon", num(cfg.privacy.epsilon));
  add("privacy.delta", num(cfg.privacy.delta));
  add("privacy.subweibull.theta", num(cfg.privacy.subweibull_theta));
  add("privacy.subweibull.k1", num(cfg.privacy.subweibull_k1));

  add("horizon", std::to_string(cfg.horizon));
  add("trials", std::to_string(cfg.trials));
  add("seed", std::to_string(cfg.seed));
  add("out", cfg.out);
  add("workers", std::to_string(cfg.workers));
  add("output.traces", cfg.write_traces ? "true" : "false");
  return out;
}

std::vector<std::string> template_names() {
  return {"synthetic-se", "synthetic-matern", "student-t", "dataset", "hard"};
}

std::string config_template(const std::string& name) {
  std::string body;
  if (name == "synthetic-se" || name == "synthetic-matern") {
    const bool matern = name == "synthetic-matern";
    body = std::string("# Synthetic RKHS objective on a 100-point grid, Laplace-curated rewards.\n") +
           "env.type = synthetic\n" + "env.kernel = " + (matern ? "matern" : "se") + "\n" +
           "env.lengthscale = 0.2\n" + (matern ? "env.nu = 2.5\n" : "") +
           "env.grid_points = 100\n"
           "env.support_points = 100\n"
           "env.noise = uniform\n"
           "env.noise_bound = 1\n"
           "algos = tgp, ata, moma\n"
           "algo.beta_scale = 0.05\n"
           "privacy.mode = pure\n"
           "privacy.epsilon = 1\n"
           "horizon = 2000\n"
           "trials = 10\n"
           "seed = 1\n"
           "out = results/" + name + "\n";
  } else if (name == "student-t") {
    body =
        "# Heavy-tailed Student-t(3) noise, no privacy.\n"
        "env.type = synthetic\n"
        "env.kernel = se\n"
        "env.lengthscale = 0.2\n"
        "env.noise = student_t\n"
        "env.student_dof = 3\n"
        "algos = tgp, moma\n"
        "algo.beta_scale = 0.05\n"
        "privacy.mode = none\n"
        "horizon = 2000\n"
        "trials = 10\n"
        "seed = 1\n"
        "out = results/student-t\n";
  } else if (name == "dataset") {
    body =
        "# Dataset-derived environment; each CSV has one column per location.\n"
        "env.type = dataset\n"
        "env.train_csv = train.csv\n"
        "env.test_csv = test.csv\n"
        "algos = tgp, ata, moma\n"
        "algo.beta_scale = 0.05\n"
        "privacy.mode = pure\n"
        "privacy.epsilon = 1\n"
        "horizon = 2000\n"
        "trials = 10\n"
        "seed = 1\n"
        "out = results/dataset\n";
  } else if (name == "hard") {
    body =
        "# Lower-bound hard instance with two-point heavy-tailed rewards.\n"
        "env.type = hard\n"
        "env.kernel = se\n"
        "env.lengthscale = 0.05\n"
        "env.grid_points = 100\n"
        "env.hard.delta = 0.05\n"
        "env.hard.v = 1\n"
        "env.hard.alpha = 1\n"
        "env.hard.B = 1\n"
        "algos = tgp, moma\n"
        "algo.tgp.truncation = moment\n"
        "algo.beta_scale = 0.05\n"
        "privacy.mode = none\n"
        "horizon = 2000\n"
        "trials = 10\n"
        "seed = 1\n"
        "out = results/hard\n";
  } else {
    std::string names;
    for (const auto& n : template_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown template '" + name + "' (available: " + names + ")");
  }
  return body;
}

}  // namespace ldpbo
