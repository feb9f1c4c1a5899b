#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ldpbo/kernels.hpp"
#include "ldpbo/rng.hpp"

namespace ldpbo {

struct NoNoise {};

/// Uniform on [-bound, bound].
struct UniformNoise {
  double bound = 1.0;
};

struct StudentTNoise {
  double dof = 3.0;
};

/// Bootstrap from empirical residuals, one pool per domain point.
struct ResidualNoise {
  std::vector<std::vector<double>> pools;
};

/// Two-point heavy-tailed reward: sgn(f) (v / 2 delta)^{1/alpha} with
/// probability (2 delta / v)^{1/alpha} |f|, else 0. Mean f.
struct TwoPointReward {
  double delta = 0.0;
  double v = 1.0;
  double alpha = 1.0;
};

using NoiseModel = std::variant<NoNoise, UniformNoise, StudentTNoise, ResidualNoise, TwoPointReward>;

std::string describe_noise(const NoiseModel& noise);

/// A reward-generating environment over a finite domain. Immutable after
/// construction; sampling takes an explicit RNG.
struct Environment {
  std::string name;
  std::shared_ptr<const Domain> domain;
  KernelSpec kernel;
  std::shared_ptr<const Eigen::MatrixXd> gram;  // kernel over the domain
  Eigen::VectorXd f;                            // objective on the domain
  std::size_t best = 0;                         // argmax of f (lowest index on ties)
  double B = 0.0;                               // max |f|
  double R = 0.0;                               // noise magnitude bound (inf if unbounded)
  double v = 0.0;                               // second-moment bound of the reward
  double c = 0.0;                               // (1+alpha)-moment bound of the noise
  NoiseModel noise;

  double optimum() const { return f(static_cast<Eigen::Index>(best)); }
  double regret(std::size_t index) const { return optimum() - f(static_cast<Eigen::Index>(index)); }
};

/// f = sum_i a_i k(., x_i) with the given atoms; B, x*, v, c derived.
Environment synthetic_from_atoms(const KernelSpec& kernel, std::shared_ptr<const Domain> domain,
                                 std::span<const std::size_t> support, std::span<const double> coefficients,
                                 NoiseModel noise);

/// Draws p coefficients uniformly in [-1,1] and p support points uniformly
/// from the domain.
Environment gen_synthetic(Rng& rng, const KernelSpec& kernel, std::shared_ptr<const Domain> domain,
                          std::size_t p, NoiseModel noise);

/// f(x) plus one noise draw.
double sample_reward(const Environment& env, std::size_t index, Rng& rng);

/// Column-per-location train/test CSVs. f = test column means; kernel =
/// covariance of the standardized train columns scaled to unit max diagonal;
/// residuals = test rows minus f.
Environment load_dataset_env(const std::filesystem::path& train_csv, const std::filesystem::path& test_csv);

struct HardInstanceParams {
  double delta = 0.01;
  std::size_t dim = 1;
  KernelSpec kernel = SquaredExponential{0.2};
  double B = 1.0;
  double alpha = 1.0;
  double v = 1.0;
  std::size_t quadrature_nodes = 64;
  /// Unspecified absolute constant in the Matérn width formula.
  double matern_constant = 1.0;
};

/// Family of shifted bump profiles with Delta-separated optima.
struct HardInstance {
  HardInstanceParams params;
  std::shared_ptr<const Domain> domain;
  double h0 = 0.0;     // h(0)
  double zeta = 0.0;   // h(x) < h(0)/2 whenever ||x||_inf > zeta
  double width = 0.0;  // w
  std::size_t per_axis = 0;
  std::vector<std::size_t> centers;   // domain index of each function's peak
  std::vector<Eigen::VectorXd> functions;

  std::size_t size() const { return functions.size(); }
  /// g(u) = (2 delta / h(0)) h(2 u zeta / w).
  double profile(const Eigen::VectorXd& offset) const;
  Environment environment(std::size_t m) const;
};

/// h(x) = integral over the unit ball of exp(-1/(1-|z|^2)) cos(2 pi <z,x>) dz,
/// by tensor-product Gauss-Legendre on [-1,1]^d (d in {1,2}).
double bump_inverse_fourier(const Eigen::VectorXd& x, std::size_t nodes = 64);

/// Smallest radius (on a 1e-3 grid up to 4) beyond which h stays below h(0)/2.
double bump_half_radius(std::size_t dim, std::size_t nodes = 64);

/// Width w of the bump for the given kernel; throws ParameterError when the
/// construction is invalid for this Delta/B.
double hard_instance_width(const HardInstanceParams& params, double h0, double zeta);

HardInstance build_hard_instance(const HardInstanceParams& params, std::shared_ptr<const Domain> domain);

/// Draws from the two-point reward of function m at domain index `index`.
double hard_reward(const HardInstance& instance, std::size_t m, std::size_t index, Rng& rng);

/// Returns true if no point is Delta-optimal for two different functions.
bool delta_separated(const HardInstance& instance);

}  // namespace ldpbo
