#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ldpbo {

/// Finite decision set: an ordered list of distinct points in [0,1]^d.
/// Index i always refers to the same point.
class Domain {
 public:
  /// `points` holds one point per row. Labels are optional; when empty they
  /// default to the row index.
  explicit Domain(Eigen::MatrixXd points, std::vector<std::string> labels = {});

  /// Tensor grid with `points_per_axis` equally spaced values in [0,1] per axis.
  static Domain uniform_grid(std::size_t points_per_axis, std::size_t dim);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::VectorXd point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Exact-match lookup.
  std::optional<std::size_t> index_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::MatrixXd points_;
  std::vector<std::string> labels_;
};

struct SquaredExponential {
  double lengthscale = 0.2;
};

struct Matern {
  double lengthscale = 0.2;
  double smoothness = 2.5;
};

/// Kernel given as an explicit matrix over a fixed domain. Build through
/// `make_precomputed`, which rescales so the largest diagonal entry is 1.
struct Precomputed {
  std::shared_ptr<const Domain> domain;
  Eigen::MatrixXd matrix;
};

using KernelSpec = std::variant<SquaredExponential, Matern, Precomputed>;

/// Throws ConfigError on non-positive lengthscale or smoothness, or on a
/// precomputed matrix whose shape does not match its domain.
void validate_kernel(const KernelSpec& spec);

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Gram matrix over `points` (one point per row).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& points);

/// Matérn covariance at distance s through the modified Bessel function of the
/// second kind, for any smoothness. Exposed so it can be checked against the
/// half-integer closed forms.
double matern_bessel(double s, double lengthscale, double smoothness);

/// Symmetrizes `raw` and divides by its largest diagonal entry.
/// Throws ConfigError if that entry is not positive.
Precomputed make_precomputed(std::shared_ptr<const Domain> domain, Eigen::MatrixXd raw);

/// Square numeric CSV whose header labels must equal the domain labels in order.
Precomputed load_precomputed_csv(const std::filesystem::path& path,
                                 std::shared_ptr<const Domain> domain);

std::string describe_kernel(const KernelSpec& spec);

}  // namespace ldpbo
