#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "ldpbo/environments.hpp"
#include "ldpbo/errors.hpp"
#include "ldpbo/rng.hpp"

using namespace ldpbo;

namespace {

const std::filesystem::path kFixtures = LDPBO_FIXTURE_DIR;

std::shared_ptr<const Domain> grid(std::size_t n, std::size_t d = 1) {
  return std::make_shared<const Domain>(Domain::uniform_grid(n, d));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename Draw>
Moments sample_moments(int n, Draw draw) {
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = draw();
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  return {mean, sq / n - mean * mean};
}

}  // namespace

TEST_CASE("single-atom synthetic function") {
  auto dom = grid(20);
  const std::vector<std::size_t> support = {7};
  const std::vector<double> coeffs = {1.0};
  const Environment env = synthetic_from_atoms(SquaredExponential{0.2}, dom, support, coeffs, UniformNoise{1.0});
  CHECK(env.best == 7);
  CHECK(env.B == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(env.f(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(std::exp(-std::pow((static_cast<double>(i) - 7.0) / 19.0, 2) / (2 * 0.04))));
  }
  CHECK(env.R == 1.0);
  CHECK(env.v == doctest::Approx(2.0));
  CHECK(env.c == doctest::Approx(1.0));
  CHECK(env.regret(7) == 0.0);
}

TEST_CASE("generated synthetic functions") {
  auto dom = grid(100);
  Rng a(12);
  Rng b(12);
  const Environment e1 = gen_synthetic(a, SquaredExponential{0.2}, dom, 100, StudentTNoise{3.0});
  const Environment e2 = gen_synthetic(b, SquaredExponential{0.2}, dom, 100, StudentTNoise{3.0});
  CHECK(e1.f == e2.f);
  CHECK(e1.B == e1.f.cwiseAbs().maxCoeff());
  CHECK(e1.f(static_cast<Eigen::Index>(e1.best)) == e1.f.maxCoeff());
  CHECK(std::isinf(e1.R));
  CHECK(e1.v == doctest::Approx(e1.B * e1.B + 3.0));
  CHECK(e1.c == doctest::Approx(3.0));
  for (Eigen::Index i = 0; i < e1.f.size(); ++i) CHECK(e1.regret(static_cast<std::size_t>(i)) >= 0.0);
}

TEST_CASE("reward sampling") {
  auto dom = grid(10);
  const std::vector<std::size_t> support = {2, 8};
  const std::vector<double> coeffs = {0.7, -0.4};
  SUBCASE("no noise returns f exactly") {
    const Environment env = synthetic_from_atoms(SquaredExponential{0.2}, dom, support, coeffs, NoNoise{});
    Rng rng(1);
    for (std::size_t i = 0; i < 10; ++i) CHECK(sample_reward(env, i, rng) == env.f(static_cast<Eigen::Index>(i)));
  }
  SUBCASE("uniform noise stays within R and is unbiased") {
    const Environment env = synthetic_from_atoms(SquaredExponential{0.2}, dom, support, coeffs, UniformNoise{1.0});
    Rng rng(2);
    const double f = env.f(2);
    bool inside = true;
    const auto m = sample_moments(100000, [&] {
      const double y = sample_reward(env, 2, rng);
      inside = inside && std::abs(y - f) <= 1.0;
      return y;
    });
    CHECK(inside);
    CHECK(std::abs(m.mean - f) <= 3.0 * std::sqrt(1.0 / 3.0 / 100000));
  }
  SUBCASE("student-t variance") {
    const Environment env = synthetic_from_atoms(SquaredExponential{0.2}, dom, support, coeffs, StudentTNoise{3.0});
    Rng rng(3);
    const double f = env.f(8);
    const auto m = sample_moments(1000000, [&] { return sample_reward(env, 8, rng) - f; });
    CHECK(m.var == doctest::Approx(3.0).epsilon(0.1));
    CHECK(std::abs(m.mean) <= 3.0 * std::sqrt(3.0 / 1000000));
  }
}

TEST_CASE("toy dataset environment") {
  const Environment env = load_dataset_env(kFixtures / "toy_train.csv", kFixtures / "toy_test.csv");
  REQUIRE(env.f.size() == 2);
  CHECK(env.f(0) == doctest::Approx(2.0));
  CHECK(env.f(1) == doctest::Approx(3.0));
  CHECK(env.B == doctest::Approx(3.0));
  CHECK(env.best == 1);
  CHECK(env.R == doctest::Approx(1.0));
  CHECK(env.c == doctest::Approx(1.0));
  CHECK(env.v == doctest::Approx(7.5));
  CHECK(env.domain->labels() == std::vector<std::string>{"a", "b"});
  CHECK(env.gram->diagonal().maxCoeff() == doctest::Approx(1.0));

  // Train columns a = [1,2,4] and b = [5,3,4], standardized with the n-1 denominator.
  const Eigen::Vector3d a(1, 2, 4);
  const Eigen::Vector3d b(5, 3, 4);
  const Eigen::Vector3d za = (a.array() - a.mean()).matrix() / std::sqrt((a.array() - a.mean()).square().sum() / 2);
  const Eigen::Vector3d zb = (b.array() - b.mean()).matrix() / std::sqrt((b.array() - b.mean()).square().sum() / 2);
  CHECK((*env.gram)(0, 1) == doctest::Approx(za.dot(zb) / 2.0));

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double y = sample_reward(env, 0, rng);
    CHECK((y == doctest::Approx(1.0) || y == doctest::Approx(3.0)));
  }
}

TEST_CASE("bundled sensor fixture") {
  const Environment env = load_dataset_env(kFixtures / "sensors_train.csv", kFixtures / "sensors_test.csv");
  CHECK(env.f.size() == 12);
  Eigen::MatrixXd K = *env.gram;
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  K.diagonal().array() += 1e-10;
  CHECK(Eigen::LLT<Eigen::MatrixXd>(K).info() == Eigen::Success);
  CHECK(env.B == env.f.cwiseAbs().maxCoeff());
}

TEST_CASE("dataset ingestion errors") {
  const auto dir = std::filesystem::temp_directory_path() / "ldpbo_env_test";
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    return dir / name;
  };
  const auto good = write("good.csv", "a,b\n1,2\n3,4\n");
  SUBCASE("column mismatch names the column") {
    const auto other = write("other.csv", "a,c\n1,2\n3,4\n");
    try {
      load_dataset_env(good, other);
      FAIL("expected IngestionError");
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("'c'") != std::string::npos);
    }
  }
  SUBCASE("bad cell") {
    const auto bad = write("bad.csv", "a,b\n1,x\n3,4\n");
    CHECK_THROWS_AS(load_dataset_env(bad, good), IngestionError);
  }
  SUBCASE("constant train column") {
    const auto flat = write("flat.csv", "a,b\n1,2\n1,4\n1,3\n");
    const Environment env = load_dataset_env(flat, good);
    CHECK((*env.gram)(0, 0) == 0.0);
    CHECK((*env.gram)(0, 1) == 0.0);
    CHECK((*env.gram)(1, 1) == 1.0);
  }
  SUBCASE("all columns constant") {
    const auto flat = write("flat2.csv", "a,b\n1,2\n1,2\n");
    CHECK_THROWS_AS(load_dataset_env(flat, good), IngestionError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("bump transform quadrature") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const double h64 = bump_inverse_fourier(zero, 64);
  const double h128 = bump_inverse_fourier(zero, 128);
  CHECK(std::abs(h64 - h128) <= 1e-6 * h128);
  // Independent value of the 1-D integral of exp(-1/(1-z^2)) over [-1,1].
  CHECK(h128 == doctest::Approx(0.443993816168).epsilon(1e-9));
  Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  CHECK(std::abs(bump_inverse_fourier(zero2, 64) - bump_inverse_fourier(zero2, 128)) <=
        1e-6 * bump_inverse_fourier(zero2, 128));
  const double zeta = bump_half_radius(1, 64);
  Eigen::VectorXd x(1);
  for (double r = zeta + 0.001; r < 4.0; r += 0.01) {
    x(0) = r;
    CHECK(bump_inverse_fourier(x, 64) < 0.5 * h64);
  }
}

TEST_CASE("hard instance construction") {
  HardInstanceParams p;
  p.delta = 0.05;
  p.dim = 1;
  p.kernel = SquaredExponential{0.05};
  p.B = 1.0;
  p.v = 1.0;
  const HardInstance inst = build_hard_instance(p, grid(100));
  REQUIRE(inst.size() >= 2);
  CHECK(delta_separated(inst));
  for (const auto& f : inst.functions) CHECK(std::abs(f.maxCoeff() - 2.0 * p.delta) <= 1e-3 * p.delta);

  // Exhaustive pairwise check.
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (std::size_t j = 0; j < inst.size(); ++j) {
      if (i == j) continue;
      for (Eigen::Index x = 0; x < 100; ++x) {
        const bool opt_i = inst.functions[i](x) > inst.functions[i].maxCoeff() - p.delta;
        const bool opt_j = inst.functions[j](x) > inst.functions[j].maxCoeff() - p.delta;
        CHECK_FALSE((opt_i && opt_j));
      }
    }
  }

  const Environment env = inst.environment(0);
  CHECK(env.best == inst.centers[0]);
  CHECK(env.B == p.B);

  SUBCASE("two-point reward moments") {
    Rng rng(6);
    const std::size_t m = 0;
    Eigen::Index x = 0;
    // Point where f is about Delta.
    double best_gap = 1e9;
    for (Eigen::Index i = 0; i < 100; ++i) {
      const double gap = std::abs(inst.functions[m](i) - p.delta);
      if (gap < best_gap) {
        best_gap = gap;
        x = i;
      }
    }
    const double f = inst.functions[m](x);
    const int n = 1000000;
    double sum = 0.0;
    double sq = 0.0;
    double mom = 0.0;
    double mom_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = hard_reward(inst, m, static_cast<std::size_t>(x), rng);
      sum += y;
      sq += y * y;
      const double a = std::pow(std::abs(y), 1.0 + p.alpha);
      mom += a;
      mom_sq += a * a;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - f) <= 3.0 * se);
    const double mom_mean = mom / n;
    const double mom_se = std::sqrt((mom_sq / n - mom_mean * mom_mean) / n);
    CHECK(mom_mean <= p.v + 3.0 * mom_se);
    CHECK(mom_mean == doctest::Approx(p.v / (2.0 * p.delta) * std::abs(f)).epsilon(0.05));
  }
  SUBCASE("zero function value gives zero reward") {
    HardInstance copy = inst;
    copy.functions[0].setZero();
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(hard_reward(copy, 0, 5, rng) == 0.0);
  }
}

TEST_CASE("hard instance parameter errors") {
  HardInstanceParams p;
  p.kernel = SquaredExponential{0.2};
  p.delta = 10.0;
  p.v = 1000.0;
  CHECK_THROWS_AS(build_hard_instance(p, grid(100)), ParameterError);
  p.delta = 0.6;
  p.v = 1.0;
  CHECK_THROWS_AS(build_hard_instance(p, grid(100)), ParameterError);
}

TEST_CASE("matern hard instance") {
  HardInstanceParams p;
  p.delta = 1e-3;
  p.kernel = Matern{0.2, 2.5};
  p.matern_constant = 1e-4;
  const HardInstance inst = build_hard_instance(p, grid(100));
  CHECK(inst.size() >= 2);
  CHECK(delta_separated(inst));
}

TEST_CASE("hard instance family size scaling in two dimensions") {
  // M grows like ln(B/Delta)^{d/2}; doubling ln(B/Delta) should about double M at d = 2.
  HardInstanceParams p;
  p.dim = 2;
  p.kernel = SquaredExponential{0.05};
  p.B = 1.0;
  p.v = 1.0;
  p.quadrature_nodes = 32;
  const double h0 = bump_inverse_fourier(Eigen::VectorXd::Zero(2), 32);
  const double zeta = bump_half_radius(2, 32);
  auto family_size = [&](double delta) {
    p.delta = delta;
    const double w = hard_instance_width(p, h0, zeta);
    const double per_axis = std::floor(1.0 / w);
    return per_axis * per_axis;
  };
  const double d1 = 1e-8;
  const double d2 = d1 * d1;  // ln(1/d2) = 2 ln(1/d1)
  const double ratio = family_size(d2) / family_size(d1);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.5);
}
