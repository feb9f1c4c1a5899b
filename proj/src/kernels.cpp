#include "ldpbo/kernels.hpp"

#include <cmath>
#include <sstream>

#include "ldpbo/csv.hpp"
#include "ldpbo/errors.hpp"

namespace ldpbo {

Domain::Domain(Eigen::MatrixXd points, std::vector<std::string> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (points_.rows() == 0 || points_.cols() == 0) throw ConfigError("domain must be non-empty");
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    for (Eigen::Index j = 0; j < points_.cols(); ++j) {
      const double v = points_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("domain point " + std::to_string(i) + " has a coordinate outside [0,1]");
      }
    }
    for (Eigen::Index k = 0; k < i; ++k) {
      if (points_.row(i) == points_.row(k)) {
        throw ConfigError("domain points " + std::to_string(k) + " and " + std::to_string(i) +
                          " coincide");
      }
    }
  }
  if (labels_.empty()) {
    for (Eigen::Index i = 0; i < points_.rows(); ++i) labels_.push_back(std::to_string(i));
  } else if (labels_.size() != size()) {
    throw ConfigError("domain label count does not match point count");
  }
}

Domain Domain::uniform_grid(std::size_t points_per_axis, std::size_t dim) {
  if (points_per_axis == 0 || dim == 0) throw ConfigError("grid needs positive size and dimension");
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= points_per_axis;
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  const double step = points_per_axis > 1 ? 1.0 / static_cast<double>(points_per_axis - 1) : 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    // Last axis varies fastest.
    for (std::size_t k = dim; k-- > 0;) {
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          static_cast<double>(rest % points_per_axis) * step;
      rest /= points_per_axis;
    }
  }
  return Domain(std::move(pts));
}

std::optional<std::size_t> Domain::index_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) return std::nullopt;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    if (points_.row(i).transpose() == x) return static_cast<std::size_t>(i);
  }
  return std::nullopt;
}

namespace {

struct Validator {
  void operator()(const SquaredExponential& k) const {
    if (!(k.lengthscale > 0.0)) throw ConfigError("SE lengthscale must be positive");
  }
  void operator()(const Matern& k) const {
    if (!(k.lengthscale > 0.0)) throw ConfigError("Matern lengthscale must be positive");
    if (!(k.smoothness > 0.0)) throw ConfigError("Matern smoothness must be positive");
  }
  void operator()(const Precomputed& k) const {
    if (!k.domain) throw ConfigError("precomputed kernel has no domain");
    const auto n = static_cast<Eigen::Index>(k.domain->size());
    if (k.matrix.rows() != n || k.matrix.cols() != n) {
      throw ConfigError("precomputed kernel shape does not match its domain");
    }
  }
};

double matern_closed_form(double r, double nu) {
  // r = s / l
  if (nu == 0.5) return std::exp(-r);
  if (nu == 1.5) {
    const double a = std::sqrt(3.0) * r;
    return (1.0 + a) * std::exp(-a);
  }
  const double a = std::sqrt(5.0) * r;
  return (1.0 + a + 5.0 * r * r / 3.0) * std::exp(-a);
}

}  // namespace

void validate_kernel(const KernelSpec& spec) { std::visit(Validator{}, spec); }

double matern_bessel(double s, double lengthscale, double smoothness) {
  const double z = std::sqrt(2.0 * smoothness) * s / lengthscale;
  if (z < 1e-12) return 1.0;
  if (z > 700.0) return 0.0;
  const double value = std::pow(2.0, 1.0 - smoothness) / std::tgamma(smoothness) *
                       std::pow(z, smoothness) * std::cyl_bessel_k(smoothness, z);
  return std::min(value, 1.0);
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  validate_kernel(spec);
  if (x.size() != y.size()) throw ConfigError("kernel arguments have different dimensions");
  if (const auto* se = std::get_if<SquaredExponential>(&spec)) {
    const double s2 = (x - y).squaredNorm();
    return std::exp(-s2 / (2.0 * se->lengthscale * se->lengthscale));
  }
  if (const auto* m = std::get_if<Matern>(&spec)) {
    const double s = (x - y).norm();
    if (m->smoothness == 0.5 || m->smoothness == 1.5 || m->smoothness == 2.5) {
      return matern_closed_form(s / m->lengthscale, m->smoothness);
    }
    return matern_bessel(s, m->lengthscale, m->smoothness);
  }
  const auto& pre = std::get<Precomputed>(spec);
  const auto i = pre.domain->index_of(x);
  const auto j = pre.domain->index_of(y);
  if (!i || !j) throw DomainMismatchError("point is not a member of the precomputed kernel's domain");
  return pre.matrix(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw ConfigError("gram_matrix needs at least one point");
  validate_kernel(spec);
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = eval_kernel(spec, points.row(i).transpose(), points.row(j).transpose());
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Precomputed make_precomputed(std::shared_ptr<const Domain> domain, Eigen::MatrixXd raw) {
  if (!domain) throw ConfigError("precomputed kernel needs a domain");
  const auto n = static_cast<Eigen::Index>(domain->size());
  if (raw.rows() != n || raw.cols() != n) {
    throw ConfigError("precomputed kernel is " + std::to_string(raw.rows()) + "x" +
                      std::to_string(raw.cols()) + ", domain has " + std::to_string(n) + " points");
  }
  Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
  const double max_diag = sym.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) throw ConfigError("precomputed kernel has no positive diagonal entry");
  sym /= max_diag;
  return Precomputed{std::move(domain), std::move(sym)};
}

Precomputed load_precomputed_csv(const std::filesystem::path& path,
                                 std::shared_ptr<const Domain> domain) {
  const auto table = read_numeric_csv(path);
  if (!domain) throw ConfigError("precomputed kernel needs a domain");
  if (table.header != domain->labels()) {
    throw IngestionError(path.string() + ": header labels do not match the domain labels");
  }
  const auto n = static_cast<Eigen::Index>(table.columns());
  if (static_cast<Eigen::Index>(table.rows.size()) != n) {
    throw IngestionError(path.string() + ": kernel matrix is not square");
  }
  Eigen::MatrixXd raw(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) raw(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return make_precomputed(std::move(domain), std::move(raw));
}

std::string describe_kernel(const KernelSpec& spec) {
  std::ostringstream os;
  if (const auto* se = std::get_if<SquaredExponential>(&spec)) {
    os << "se(l=" << se->lengthscale << ")";
  } else if (const auto* m = std::get_if<Matern>(&spec)) {
    os << "matern(l=" << m->lengthscale << ",nu=" << m->smoothness << ")";
  } else {
    os << "precomputed(n=" << std::get<Precomputed>(spec).matrix.rows() << ")";
  }
  return os.str();
}

}  // namespace ldpbo
