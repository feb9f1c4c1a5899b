#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "ldpbo/errors.hpp"
#include "ldpbo/gp.hpp"
#include "ldpbo/kernels.hpp"
#include "ldpbo/rng.hpp"

using namespace ldpbo;

namespace {

std::shared_ptr<const Eigen::MatrixXd> grid_gram(const KernelSpec& spec, std::size_t n) {
  const Domain d = Domain::uniform_grid(n, 1);
  return std::make_shared<const Eigen::MatrixXd>(gram_matrix(spec, d.points()));
}

struct DenseOracle {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  double info_gain = 0.0;
};

// Direct linear solve with (K_t + lambda I), independent of any Cholesky code.
DenseOracle dense_posterior(const Eigen::MatrixXd& gram, const std::vector<std::size_t>& idx,
                            const std::vector<double>& y, double lambda) {
  const auto t = static_cast<Eigen::Index>(idx.size());
  const auto n = gram.rows();
  DenseOracle out;
  if (t == 0) {
    out.mean = Eigen::VectorXd::Zero(n);
    out.variance = gram.diagonal();
    return out;
  }
  Eigen::MatrixXd Kt(t, t);
  Eigen::MatrixXd kx(t, n);
  Eigen::VectorXd yv(t);
  for (Eigen::Index a = 0; a < t; ++a) {
    yv(a) = y[static_cast<std::size_t>(a)];
    kx.row(a) = gram.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]));
    for (Eigen::Index b = 0; b < t; ++b) {
      Kt(a, b) = gram(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                      static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
    }
  }
  const Eigen::MatrixXd A = Kt + lambda * Eigen::MatrixXd::Identity(t, t);
  const auto lu = A.fullPivLu();
  out.mean = kx.transpose() * lu.solve(yv);
  const Eigen::MatrixXd S = lu.solve(kx);
  out.variance = gram.diagonal() - (kx.array() * S.array()).colwise().sum().transpose().matrix();
  const Eigen::MatrixXd I_plus = Eigen::MatrixXd::Identity(t, t) + Kt / lambda;
  out.info_gain = 0.5 * std::log(I_plus.fullPivLu().determinant());
  return out;
}

}  // namespace

TEST_CASE("empty posterior is the prior") {
  auto gram = grid_gram(SquaredExponential{0.2}, 20);
  ExactPosterior post(gram, 1.0);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto p = post.posterior(i);
    CHECK(p.mean == 0.0);
    CHECK(p.variance == doctest::Approx((*gram)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
  }
  CHECK(post.realized_info_gain() == 0.0);
}

TEST_CASE("single observation scalar formula") {
  auto gram = grid_gram(SquaredExponential{0.2}, 10);
  ExactPosterior post(gram, 1.0);
  post.append(3, 1.7);
  const auto p = post.posterior(3);
  CHECK(p.mean == doctest::Approx(1.7 / 2.0).epsilon(1e-14));
  CHECK(p.variance == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(post.realized_info_gain() == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(post.realized_info_gain() == doctest::Approx(0.34657).epsilon(1e-5));
}

TEST_CASE("posterior matches the dense solve on random instances") {
  Rng rng(2024);
  for (int instance = 0; instance < 40; ++instance) {
    const KernelSpec spec = instance % 2 == 0 ? KernelSpec{SquaredExponential{0.1 + 0.3 * rng.uniform_open()}}
                                              : KernelSpec{Matern{0.1 + 0.3 * rng.uniform_open(), 2.5}};
    const double lambda = 0.05 + 2.0 * rng.uniform_open();
    auto gram = grid_gram(spec, 30);
    ExactPosterior post(gram, lambda, 7);  // small refactor period exercises both paths
    std::vector<std::size_t> idx;
    std::vector<double> y;
    const std::size_t t = 1 + rng.index(20);
    for (std::size_t s = 0; s < t; ++s) {
      idx.push_back(rng.index(30));
      y.push_back(rng.uniform(-2, 2));
      post.append(idx.back(), y.back());
    }
    const auto oracle = dense_posterior(*gram, idx, y, lambda);
    CHECK((post.means() - oracle.mean).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((post.variances() - oracle.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(post.realized_info_gain() == doctest::Approx(oracle.info_gain).epsilon(1e-9));

    const Eigen::MatrixXd L = post.factor();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
    for (std::size_t a = 0; a < t; ++a) {
      for (std::size_t b = 0; b < t; ++b) {
        A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            (*gram)(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b])) + (a == b ? lambda : 0.0);
      }
    }
    CHECK((L * L.transpose() - A).norm() <= 1e-8);
  }
}

TEST_CASE("log determinant with three points") {
  auto gram = grid_gram(Matern{0.3, 1.5}, 12);
  ExactPosterior post(gram, 0.7);
  const std::vector<std::size_t> idx = {2, 9, 5};
  const std::vector<double> y = {0.1, -0.4, 1.0};
  for (std::size_t i = 0; i < 3; ++i) post.append(idx[i], y[i]);
  CHECK(post.realized_info_gain() == doctest::Approx(dense_posterior(*gram, idx, y, 0.7).info_gain).epsilon(1e-10));
}

TEST_CASE("variances shrink and info gain grows as data arrives") {
  auto gram = grid_gram(SquaredExponential{0.2}, 50);
  ExactPosterior post(gram, 0.5, 16);
  Rng rng(5);
  Eigen::VectorXd prev_var = post.variances();
  double prev_gain = 0.0;
  for (int s = 0; s < 300; ++s) {
    post.append(rng.index(50), rng.normal());
    const Eigen::VectorXd var = post.variances();
    CHECK(((var - prev_var).array() <= 1e-10).all());
    CHECK((var.array() >= 0.0).all());
    CHECK((var.array() <= gram->diagonal().array() + 1e-12).all());
    CHECK(post.realized_info_gain() >= prev_gain - 1e-10);
    prev_var = var;
    prev_gain = post.realized_info_gain();
  }
  // Long-run state still agrees with a fresh dense solve.
  const auto oracle = dense_posterior(*gram, post.visited(), post.rewards(), 0.5);
  CHECK((post.means() - oracle.mean).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("variance clamp") {
  CHECK(clamp_variance(0.3, 0) == 0.3);
  CHECK(clamp_variance(-5e-13, 0) == 0.0);
  CHECK_THROWS_AS(clamp_variance(-1e-9, 4), NumericError);
  try {
    clamp_variance(-1e-6, 17);
  } catch (const NumericError& e) {
    CHECK(e.index() == 17);
  }
}

TEST_CASE("non-PSD gram reports the failing index") {
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1;
  ExactPosterior post(std::make_shared<const Eigen::MatrixXd>(bad), 1e-3);
  try {
    post.append(0, 1.0);
    post.append(1, 1.0);
    post.append(2, 1.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.index() == 2);
  }
}

TEST_CASE("ucb argmax") {
  CHECK(ucb_argmax(std::vector<double>{1, 3, 2}, std::vector<double>{0, 0, 0}, 0.0) == 1);
  CHECK(ucb_argmax(std::vector<double>{0, 0}, std::vector<double>{1, 2}, 1.0) == 1);
  CHECK(ucb_argmax(std::vector<double>{5, 4, 4}, std::vector<double>{0, 1, 0}, 1.0) == 0);
  const std::vector<double> mu = {0.3, 1.1, -0.2, 0.9};
  const std::vector<double> sigma = {0.5, 0.1, 1.4, 0.3};
  std::vector<double> shifted = mu;
  for (double& m : shifted) m += 17.0;
  CHECK(ucb_argmax(mu, sigma, 0.8) == ucb_argmax(shifted, sigma, 0.8));
  const std::vector<double> with_nan = {0.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
  try {
    ucb_argmax(with_nan, std::vector<double>{1, 1, 1}, 1.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.index() == 1);
  }
}
