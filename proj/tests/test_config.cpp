#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ldpbo/config.hpp"
#include "ldpbo/errors.hpp"

using namespace ldpbo;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "ldpbo_config_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << body;
  return path;
}

std::string error_of(const KeyValues& kv) {
  try {
    parse_experiment(kv);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("key-value parsing") {
  const auto kv = parse_key_values("# comment\n\nhorizon = 50  # trailing\n  algos=tgp, ata\nout = a b\n");
  CHECK(kv.at("horizon") == "50");
  CHECK(kv.at("algos") == "tgp, ata");
  CHECK(kv.at("out") == "a b");
  CHECK(kv.size() == 3);
  CHECK_THROWS_AS(parse_key_values("horizon 50\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_key_values(" = 2\n"), ConfigError);
  CHECK(parse_key_values("\xEF\xBB\xBFtrials = 3\n").at("trials") == "3");
}

TEST_CASE("defaults and explicit values") {
  const auto cfg = parse_experiment(parse_key_values("algos = tgp, moma\nhorizon = 500\nalgo.moma.beta_scale = 0.5\n"
                                                     "algo.beta_scale = 0.1\nprivacy.mode = pure\nseed = 7\n"));
  REQUIRE(cfg.algos.size() == 2);
  CHECK(cfg.algos[0].variant == Variant::Tgp);
  CHECK(cfg.algos[0].beta_scale == 0.1);
  CHECK(cfg.algos[1].beta_scale == 0.5);
  CHECK(cfg.horizon == 500);
  CHECK(cfg.seed == 7);
  CHECK(cfg.privacy.mode == PrivacyMode::Pure);
  CHECK(cfg.env.type == EnvType::Synthetic);
  CHECK(cfg.trials == 10);
  CHECK(cfg.workers == 1);
}

TEST_CASE("every violation is reported") {
  const std::string msg =
      error_of(parse_key_values("algos = tgp, bogus\nhorizon = -4\nenv.kernel = cubic\nprivacy.epsilon = 0\n"
                                "mystery.key = 1\n"));
  CHECK(msg.find("bogus") != std::string::npos);
  CHECK(msg.find("horizon") != std::string::npos);
  CHECK(msg.find("env.kernel") != std::string::npos);
  CHECK(msg.find("privacy.epsilon") != std::string::npos);
  CHECK(msg.find("unknown key 'mystery.key'") != std::string::npos);
  CHECK(msg.find("5 problems") != std::string::npos);
}

TEST_CASE("inconsistent combinations are rejected") {
  CHECK_FALSE(error_of(parse_key_values("algos = tgp\nprivacy.mode = pure\nenv.noise = student_t\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = gpucb\nenv.noise = student_t\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = moma\nhorizon = 100\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = tgp, tgp\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = tgp\nenv.type = dataset\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = tgp\nalgo.tgp.truncation = tight\n")).empty());
  CHECK_FALSE(error_of(parse_key_values("algos = tgp\nenv.type = hard\nenv.hard.delta = 5\n")).empty());
  CHECK(error_of(parse_key_values("algos = tgp\nprivacy.mode = approximate\nenv.noise = student_t\n")).empty());
  CHECK(error_of(parse_key_values("algos = tgp\nalgo.tgp.truncation = moment\n")).empty());
}

TEST_CASE("templates validate") {
  for (const auto& name : template_names()) {
    CAPTURE(name);
    if (name == "dataset") continue;  // references files supplied by the user
    CHECK_NOTHROW(parse_experiment(parse_key_values(config_template(name))));
  }
  CHECK_THROWS_AS(config_template("nope"), ConfigError);
}

TEST_CASE("resolved echo round-trips") {
  const auto cfg = parse_experiment(parse_key_values(config_template("synthetic-matern")));
  KeyValues echo;
  for (const auto& [k, v] : to_key_values(cfg)) echo[k] = v;
  const auto again = parse_experiment(echo);
  CHECK(to_key_values(again) == to_key_values(cfg));
}

TEST_CASE("loading files with overrides") {
  const auto path = temp_file("exp.cfg", "algos = tgp\nseed = 3\ntrials = 4\n");
  const auto cfg = load_experiment(path, {{"seed", "11"}});
  CHECK(cfg.seed == 11);
  CHECK(cfg.trials == 4);
  CHECK_THROWS_AS(load_experiment(path.parent_path() / "missing.cfg"), Error);

  const auto json = temp_file("run.json", R"({"config": {"algos": "tgp, ata", "horizon": 300, "env": {"lengthscale": 0.3}},
                                              "derived": {}})");
  const auto from_json = load_experiment(json);
  CHECK(from_json.horizon == 300);
  CHECK(from_json.algos.size() == 2);
  CHECK(from_json.env.lengthscale == doctest::Approx(0.3));
  const auto bad_json = temp_file("bad.json", "{\"config\": ");
  CHECK_THROWS_AS(load_experiment(bad_json), ConfigError);
}
