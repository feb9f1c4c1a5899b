#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ldpbo/errors.hpp"
#include "ldpbo/kernels.hpp"
#include "ldpbo/rng.hpp"

using namespace ldpbo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double matern52(double s, double l) {
  const double r = std::sqrt(5.0) * s / l;
  return (1.0 + r + 5.0 * s * s / (3.0 * l * l)) * std::exp(-r);
}

double matern_reference(double s, double l, double nu) {
  if (s == 0.0) return 1.0;
  const double z = std::sqrt(2.0 * nu) * s / l;
  return std::pow(2.0, 1.0 - nu) / boost::math::tgamma(nu) * std::pow(z, nu) * boost::math::cyl_bessel_k(nu, z);
}

}  // namespace

TEST_CASE("squared exponential values") {
  const KernelSpec se = SquaredExponential{0.2};
  CHECK(eval_kernel(se, vec({0.3}), vec({0.3})) == 1.0);
  CHECK(eval_kernel(se, vec({0.1}), vec({0.3})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(eval_kernel(se, vec({0.1}), vec({0.3})) == doctest::Approx(0.60653).epsilon(1e-5));
  // Euclidean distance in two dimensions.
  CHECK(eval_kernel(se, vec({0.0, 0.0}), vec({0.12, 0.16})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("matern closed forms agree with the Bessel form") {
  const KernelSpec m25 = Matern{0.2, 2.5};
  CHECK(eval_kernel(m25, vec({0.4}), vec({0.4})) == 1.0);
  CHECK(eval_kernel(m25, vec({0.1}), vec({0.3})) == doctest::Approx(matern52(0.2, 0.2)).epsilon(1e-14));

  for (double nu : {0.5, 1.5, 2.5}) {
    for (double s : {1e-3, 0.05, 0.2, 0.7, 1.3}) {
      const KernelSpec spec = Matern{0.3, nu};
      const double closed = eval_kernel(spec, vec({0.0}), vec({s}));
      CHECK(matern_bessel(s, 0.3, nu) == doctest::Approx(closed).epsilon(1e-10));
      CHECK(closed == doctest::Approx(matern_reference(s, 0.3, nu)).epsilon(1e-10));
    }
  }
}

TEST_CASE("matern general smoothness uses the Bessel form") {
  for (double nu : {0.75, 1.0, 3.2}) {
    const KernelSpec spec = Matern{0.25, nu};
    for (double s : {0.0, 0.01, 0.2, 0.9}) {
      CHECK(eval_kernel(spec, vec({0.0}), vec({s})) == doctest::Approx(matern_reference(s, 0.25, nu)).epsilon(1e-10));
    }
  }
}

TEST_CASE("kernel symmetry and unit diagonal over random points") {
  Rng rng(7);
  const std::vector<KernelSpec> specs = {SquaredExponential{0.2}, Matern{0.2, 2.5}, Matern{0.3, 0.5},
                                         Matern{0.15, 1.7}};
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd x = vec({rng.uniform(0, 1), rng.uniform(0, 1)});
      const Eigen::VectorXd y = vec({rng.uniform(0, 1), rng.uniform(0, 1)});
      CHECK(eval_kernel(spec, x, y) == eval_kernel(spec, y, x));
      CHECK(eval_kernel(spec, x, x) <= 1.0 + 1e-12);
      CHECK(std::abs(eval_kernel(spec, x, y)) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("invalid kernel parameters") {
  CHECK_THROWS_AS(validate_kernel(SquaredExponential{0.0}), ConfigError);
  CHECK_THROWS_AS(validate_kernel(Matern{-1.0, 2.5}), ConfigError);
  CHECK_THROWS_AS(validate_kernel(Matern{0.2, 0.0}), ConfigError);
  CHECK_THROWS_AS(eval_kernel(SquaredExponential{-0.2}, vec({0.0}), vec({0.1})), ConfigError);
}

TEST_CASE("gram matrix") {
  const KernelSpec se = SquaredExponential{0.2};
  SUBCASE("single point") {
    Eigen::MatrixXd p(1, 1);
    p << 0.4;
    const auto K = gram_matrix(se, p);
    REQUIRE(K.rows() == 1);
    CHECK(K(0, 0) == 1.0);
  }
  SUBCASE("duplicate points give a rank-one block") {
    Eigen::MatrixXd p(2, 1);
    p << 0.4, 0.4;
    const auto K = gram_matrix(se, p);
    CHECK(K.isApprox(Eigen::MatrixXd::Ones(2, 2)));
  }
  SUBCASE("entrywise equal to pairwise evaluation") {
    Rng rng(3);
    Eigen::MatrixXd p(5, 2);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(0, 1);
    for (const KernelSpec& spec : {KernelSpec{se}, KernelSpec{Matern{0.2, 2.5}}, KernelSpec{Matern{0.2, 1.2}}}) {
      const auto K = gram_matrix(spec, p);
      for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) {
          CHECK(std::abs(K(i, j) - eval_kernel(spec, p.row(i).transpose(), p.row(j).transpose())) <= 1e-12);
        }
      }
    }
  }
  SUBCASE("cholesky of K + 1e-10 I succeeds on 500 points") {
    Rng rng(11);
    Eigen::MatrixXd p(500, 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, 0) = rng.uniform(0, 1);
    for (const KernelSpec& spec : {KernelSpec{se}, KernelSpec{Matern{0.2, 2.5}}}) {
      Eigen::MatrixXd K = gram_matrix(spec, p);
      K.diagonal().array() += 1e-10;
      Eigen::LLT<Eigen::MatrixXd> llt(K);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("domain invariants") {
  const Domain grid = Domain::uniform_grid(100, 1);
  CHECK(grid.size() == 100);
  CHECK(grid.point(0)(0) == 0.0);
  CHECK(grid.point(99)(0) == 1.0);
  CHECK(grid.point(33)(0) == doctest::Approx(33.0 / 99.0));
  CHECK(grid.index_of(grid.point(42)).value() == 42);
  CHECK_FALSE(grid.index_of(vec({0.005})).has_value());

  const Domain grid2 = Domain::uniform_grid(4, 2);
  CHECK(grid2.size() == 16);
  CHECK(grid2.dim() == 2);

  Eigen::MatrixXd bad(2, 1);
  bad << 0.2, 1.5;
  CHECK_THROWS_AS(Domain{bad}, ConfigError);
  Eigen::MatrixXd dup(2, 1);
  dup << 0.2, 0.2;
  CHECK_THROWS_AS(Domain{dup}, ConfigError);
}

TEST_CASE("precomputed kernels") {
  auto domain = std::make_shared<const Domain>(Domain::uniform_grid(3, 1));
  Eigen::MatrixXd raw(3, 3);
  raw << 4, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
  const Precomputed pre = make_precomputed(domain, raw);
  CHECK(pre.matrix.diagonal().maxCoeff() == 1.0);
  CHECK(pre.matrix(0, 1) == doctest::Approx(0.25));
  const KernelSpec spec = pre;
  CHECK(eval_kernel(spec, domain->point(1), domain->point(2)) == doctest::Approx(0.125));
  CHECK_THROWS_AS(eval_kernel(spec, vec({0.3}), domain->point(2)), DomainMismatchError);
  CHECK_THROWS_AS(make_precomputed(domain, Eigen::MatrixXd::Zero(3, 3)), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "ldpbo_kernel_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "k.csv");
    out << "0,1,2\n2,1,0\n2,2,0\n0,0,1\n";
  }
  const Precomputed loaded = load_precomputed_csv(dir / "k.csv", domain);
  CHECK(loaded.matrix(0, 0) == 1.0);
  CHECK(loaded.matrix(0, 1) == doctest::Approx(0.75));  // symmetrized (1+2)/2, then / 2
  {
    std::ofstream out(dir / "bad.csv");
    out << "a,b,c\n1,0,0\n0,1,0\n0,0,1\n";
  }
  CHECK_THROWS(load_precomputed_csv(dir / "bad.csv", domain));
  std::filesystem::remove_all(dir);
}
