#include "ldpbo/environments.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "ldpbo/csv.hpp"
#include "ldpbo/errors.hpp"

namespace ldpbo {

namespace {

std::size_t argmax_lowest(const Eigen::VectorXd& f) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < f.size(); ++i) {
    if (f(i) > f(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

void set_moments(Environment& env) {
  const double b2 = env.B * env.B;
  if (const auto* u = std::get_if<UniformNoise>(&env.noise)) {
    env.R = u->bound;
    env.v = b2 + u->bound * u->bound;
    env.c = u->bound * u->bound;
  } else if (const auto* t = std::get_if<StudentTNoise>(&env.noise)) {
    const double var = t->dof > 2.0 ? t->dof / (t->dof - 2.0) : std::numeric_limits<double>::infinity();
    env.R = std::numeric_limits<double>::infinity();
    env.v = b2 + var;
    env.c = var;
  } else {
    env.R = 0.0;
    env.v = b2;
    env.c = 0.0;
  }
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned N>
GaussRule expand_rule() {
  using rule = boost::math::quadrature::gauss<double, N>;
  GaussRule out;
  const auto& a = rule::abscissa();
  const auto& w = rule::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.nodes.push_back(a[i]);
    out.weights.push_back(w[i]);
    if (a[i] != 0.0) {
      out.nodes.push_back(-a[i]);
      out.weights.push_back(w[i]);
    }
  }
  return out;
}

const GaussRule& gauss_rule(std::size_t nodes) {
  static const GaussRule r32 = expand_rule<32>();
  static const GaussRule r64 = expand_rule<64>();
  static const GaussRule r128 = expand_rule<128>();
  switch (nodes) {
    case 32: return r32;
    case 64: return r64;
    case 128: return r128;
    default: throw ConfigError("quadrature node count must be 32, 64 or 128");
  }
}

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

}  // namespace

std::string describe_noise(const NoiseModel& noise) {
  std::ostringstream os;
  if (std::holds_alternative<NoNoise>(noise)) os << "none";
  else if (const auto* u = std::get_if<UniformNoise>(&noise)) os << "uniform(R=" << u->bound << ")";
  else if (const auto* t = std::get_if<StudentTNoise>(&noise)) os << "student_t(dof=" << t->dof << ")";
  else if (std::holds_alternative<ResidualNoise>(noise)) os << "residual_bootstrap";
  else {
    const auto& tp = std::get<TwoPointReward>(noise);
    os << "two_point(delta=" << tp.delta << ",v=" << tp.v << ",alpha=" << tp.alpha << ")";
  }
  return os.str();
}

Environment synthetic_from_atoms(const KernelSpec& kernel, std::shared_ptr<const Domain> domain,
                                 std::span<const std::size_t> support, std::span<const double> coefficients,
                                 NoiseModel noise) {
  if (!domain) throw ConfigError("environment needs a domain");
  if (support.empty() || support.size() != coefficients.size()) {
    throw ConfigError("synthetic function needs matching, non-empty support and coefficient lists");
  }
  Environment env;
  env.name = "synthetic";
  env.domain = domain;
  env.kernel = kernel;
  env.gram = std::make_shared<const Eigen::MatrixXd>(gram_matrix(kernel, domain->points()));
  env.f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain->size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] >= domain->size()) throw ConfigError("support point outside the domain");
    env.f += coefficients[i] * env.gram->col(static_cast<Eigen::Index>(support[i]));
  }
  env.best = argmax_lowest(env.f);
  env.B = env.f.cwiseAbs().maxCoeff();
  env.noise = std::move(noise);
  set_moments(env);
  return env;
}

Environment gen_synthetic(Rng& rng, const KernelSpec& kernel, std::shared_ptr<const Domain> domain,
                          std::size_t p, NoiseModel noise) {
  if (p == 0) throw ConfigError("synthetic function needs p >= 1 support points");
  if (!domain) throw ConfigError("environment needs a domain");
  std::vector<std::size_t> support(p);
  std::vector<double> coeffs(p);
  for (std::size_t i = 0; i < p; ++i) {
    coeffs[i] = rng.uniform(-1.0, 1.0);
    support[i] = rng.index(domain->size());
  }
  return synthetic_from_atoms(kernel, std::move(domain), support, coeffs, std::move(noise));
}

double sample_reward(const Environment& env, std::size_t index, Rng& rng) {
  if (index >= static_cast<std::size_t>(env.f.size())) throw ConfigError("reward index outside the domain");
  const double fx = env.f(static_cast<Eigen::Index>(index));
  return std::visit(
      [&](const auto& noise) -> double {
        using T = std::decay_t<decltype(noise)>;
        if constexpr (std::is_same_v<T, NoNoise>) {
          return fx;
        } else if constexpr (std::is_same_v<T, UniformNoise>) {
          return fx + rng.uniform(-noise.bound, noise.bound);
        } else if constexpr (std::is_same_v<T, StudentTNoise>) {
          return fx + rng.student_t(noise.dof);
        } else if constexpr (std::is_same_v<T, ResidualNoise>) {
          const auto& pool = noise.pools.at(index);
          return fx + pool[rng.index(pool.size())];
        } else {
          const double mag = std::pow(noise.v / (2.0 * noise.delta), 1.0 / noise.alpha);
          const double p = std::pow(2.0 * noise.delta / noise.v, 1.0 / noise.alpha) * std::abs(fx);
          if (fx == 0.0) return 0.0;
          return rng.bernoulli(p) ? std::copysign(mag, fx) : 0.0;
        }
      },
      env.noise);
}

Environment load_dataset_env(const std::filesystem::path& train_csv, const std::filesystem::path& test_csv) {
  const auto train = read_numeric_csv(train_csv);
  const auto test = read_numeric_csv(test_csv);
  if (train.columns() != test.columns()) {
    throw IngestionError("train has " + std::to_string(train.columns()) + " columns, test has " +
                         std::to_string(test.columns()));
  }
  for (std::size_t j = 0; j < train.columns(); ++j) {
    if (train.header[j] != test.header[j]) {
      throw IngestionError("column " + std::to_string(j) + " is '" + train.header[j] + "' in train but '" +
                           test.header[j] + "' in test");
    }
  }
  if (train.rows.size() < 2) throw IngestionError(train_csv.string() + ": need at least 2 sample rows");
  if (test.rows.size() < 2) throw IngestionError(test_csv.string() + ": need at least 2 sample rows");

  const auto n = static_cast<Eigen::Index>(train.columns());
  auto to_matrix = [n](const NumericTable& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), n);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (Eigen::Index j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), j) = t.rows[i][static_cast<std::size_t>(j)];
    }
    return m;
  };
  const Eigen::MatrixXd tr = to_matrix(train);
  const Eigen::MatrixXd te = to_matrix(test);

  // Standardize train columns; constant columns become all-zero.
  Eigen::MatrixXd z = tr.rowwise() - tr.colwise().mean();
  const double denom = static_cast<double>(tr.rows() - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / denom);
    if (sd > 0.0) z.col(j) /= sd;
    else z.col(j).setZero();
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / denom;
  if (!(cov.diagonal().maxCoeff() > 0.0)) throw IngestionError("every train column is constant; kernel undefined");

  Eigen::MatrixXd coords(n, 1);
  for (Eigen::Index j = 0; j < n; ++j) coords(j, 0) = n > 1 ? static_cast<double>(j) / static_cast<double>(n - 1) : 0.0;
  auto domain = std::make_shared<const Domain>(coords, train.header);

  Environment env;
  env.name = "dataset";
  env.domain = domain;
  auto pre = make_precomputed(domain, cov);
  env.gram = std::make_shared<const Eigen::MatrixXd>(pre.matrix);
  env.kernel = std::move(pre);
  env.f = te.colwise().mean().transpose();
  env.best = argmax_lowest(env.f);
  env.B = env.f.cwiseAbs().maxCoeff();

  const Eigen::MatrixXd resid = te.rowwise() - env.f.transpose();
  env.R = resid.cwiseAbs().maxCoeff();
  env.v = te.array().square().mean();
  env.c = resid.array().square().mean();
  ResidualNoise pools;
  pools.pools.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < resid.rows(); ++i) pools.pools[static_cast<std::size_t>(j)].push_back(resid(i, j));
  }
  env.noise = std::move(pools);
  return env;
}

double bump_inverse_fourier(const Eigen::VectorXd& x, std::size_t nodes) {
  const auto& rule = gauss_rule(nodes);
  const std::size_t q = rule.nodes.size();
  constexpr double two_pi = 2.0 * M_PI;
  if (x.size() == 1) {
    double sum = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      const double z = rule.nodes[i];
      sum += rule.weights[i] * bump(z * z) * std::cos(two_pi * z * x(0));
    }
    return sum;
  }
  if (x.size() == 2) {
    double sum = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      const double z1 = rule.nodes[i];
      for (std::size_t j = 0; j < q; ++j) {
        const double z2 = rule.nodes[j];
        const double r2 = z1 * z1 + z2 * z2;
        if (r2 >= 1.0) continue;
        sum += rule.weights[i] * rule.weights[j] * bump(r2) * std::cos(two_pi * (z1 * x(0) + z2 * x(1)));
      }
    }
    return sum;
  }
  throw ConfigError("bump transform is implemented for d = 1 and d = 2 only");
}

double bump_half_radius(std::size_t dim, std::size_t nodes) {
  if (dim != 1 && dim != 2) throw ConfigError("hard instances support d = 1 and d = 2 only");
  // H is radial, so h is radial too; the worst case of ||x||_inf > r is the
  // axis direction. Scan radii and keep the running tail maximum.
  constexpr double step = 1e-3;
  constexpr double max_radius = 4.0;
  const auto count = static_cast<std::size_t>(max_radius / step) + 1;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  const double half = 0.5 * bump_inverse_fourier(x, nodes);
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    x(0) = static_cast<double>(k) * step;
    values[k] = bump_inverse_fourier(x, nodes);
  }
  std::size_t k = count;
  while (k > 0 && values[k - 1] < half) --k;
  return static_cast<double>(k) * step;
}

double hard_instance_width(const HardInstanceParams& params, double h0, double zeta) {
  const double d = static_cast<double>(params.dim);
  if (const auto* se = std::get_if<SquaredExponential>(&params.kernel)) {
    const double l = se->lengthscale;
    const double arg = params.B * std::pow(2.0 * M_PI * l * l, d / 4.0) * h0 / (2.0 * params.delta);
    if (!(arg > 1.0)) {
      throw ParameterError("SE width formula needs log(B (2 pi l^2)^{d/4} h(0) / (2 Delta)) > 0; use a smaller Delta/B");
    }
    return 2.0 * zeta * M_PI * l / std::sqrt(std::log(arg));
  }
  if (const auto* m = std::get_if<Matern>(&params.kernel)) {
    const double nu = m->smoothness;
    const double base = 2.0 * params.delta * std::pow(8.0 * M_PI * M_PI, (nu + d / 2.0) / 2.0) /
                        (params.B * std::pow(params.matern_constant, -0.5) * h0);
    return 2.0 * zeta * std::pow(base, 1.0 / nu);
  }
  throw ConfigError("hard instances need an SE or Matern kernel");
}

double HardInstance::profile(const Eigen::VectorXd& offset) const {
  const Eigen::VectorXd scaled = offset * (2.0 * zeta / width);
  return 2.0 * params.delta / h0 * bump_inverse_fourier(scaled, params.quadrature_nodes);
}

HardInstance build_hard_instance(const HardInstanceParams& params, std::shared_ptr<const Domain> domain) {
  if (!domain) throw ConfigError("hard instance needs a domain");
  if (params.dim != 1 && params.dim != 2) throw ParameterError("hard instances support d = 1 and d = 2 only");
  if (domain->dim() != params.dim) throw ConfigError("hard instance dimension does not match the domain");
  if (!(params.delta > 0.0) || !(params.B > 0.0) || !(params.v > 0.0)) {
    throw ParameterError("hard instance needs positive Delta, B and v");
  }
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw ParameterError("alpha must lie in (0,1]");
  if (params.delta > 0.5 * std::pow(params.v, 1.0 / (1.0 + params.alpha))) {
    throw ParameterError("reward distribution invalid: need Delta <= v^{1/(1+alpha)} / 2");
  }

  HardInstance inst;
  inst.params = params;
  inst.domain = domain;
  inst.h0 = bump_inverse_fourier(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.dim)), params.quadrature_nodes);
  inst.zeta = bump_half_radius(params.dim, params.quadrature_nodes);
  inst.width = hard_instance_width(params, inst.h0, inst.zeta);
  // Peaks sit on the domain point nearest to each cell centre of an even
  // per_axis^d partition of [0,1]^d, coarsened until snapped peaks are more
  // than w apart in the sup norm.
  const auto& pts = domain->points();
  std::size_t total = 0;
  for (inst.per_axis = static_cast<std::size_t>(std::floor(1.0 / inst.width)); inst.per_axis > 0; --inst.per_axis) {
    total = 1;
    for (std::size_t k = 0; k < params.dim; ++k) total *= inst.per_axis;
    const double cell = 1.0 / static_cast<double>(inst.per_axis);
    inst.centers.clear();
    for (std::size_t m = 0; m < total; ++m) {
      Eigen::VectorXd centre(static_cast<Eigen::Index>(params.dim));
      std::size_t rest = m;
      for (std::size_t k = params.dim; k-- > 0;) {
        centre(static_cast<Eigen::Index>(k)) = (static_cast<double>(rest % inst.per_axis) + 0.5) * cell;
        rest /= inst.per_axis;
      }
      Eigen::Index nearest = 0;
      (pts.rowwise() - centre.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
      inst.centers.push_back(static_cast<std::size_t>(nearest));
    }
    bool apart = true;
    for (std::size_t a = 0; a < total && apart; ++a) {
      for (std::size_t b = a + 1; b < total && apart; ++b) {
        const double gap = (pts.row(static_cast<Eigen::Index>(inst.centers[a])) -
                            pts.row(static_cast<Eigen::Index>(inst.centers[b])))
                               .cwiseAbs()
                               .maxCoeff();
        apart = gap > inst.width;
      }
    }
    if (apart) break;
  }
  if (inst.per_axis == 0) throw ParameterError("bump width exceeds the domain; use a smaller Delta/B");

  const auto n = static_cast<Eigen::Index>(domain->size());
  for (std::size_t m = 0; m < total; ++m) {
    const Eigen::VectorXd c = pts.row(static_cast<Eigen::Index>(inst.centers[m])).transpose();
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = inst.profile(pts.row(i).transpose() - c);
    inst.functions.push_back(std::move(f));
  }
  return inst;
}

Environment HardInstance::environment(std::size_t m) const {
  if (m >= functions.size()) throw ConfigError("hard instance function index out of range");
  Environment env;
  env.name = "hard_instance";
  env.domain = domain;
  env.kernel = params.kernel;
  env.gram = std::make_shared<const Eigen::MatrixXd>(gram_matrix(params.kernel, domain->points()));
  env.f = functions[m];
  env.best = argmax_lowest(env.f);
  env.B = params.B;
  const double mag = std::pow(params.v / (2.0 * params.delta), 1.0 / params.alpha);
  env.R = mag + env.f.cwiseAbs().maxCoeff();
  env.v = params.v;
  env.c = params.v;
  env.noise = TwoPointReward{params.delta, params.v, params.alpha};
  return env;
}

double hard_reward(const HardInstance& instance, std::size_t m, std::size_t index, Rng& rng) {
  const auto& p = instance.params;
  if (p.delta > 0.5 * std::pow(p.v, 1.0 / (1.0 + p.alpha))) {
    throw ParameterError("reward distribution invalid: need Delta <= v^{1/(1+alpha)} / 2");
  }
  if (m >= instance.functions.size()) throw ConfigError("hard instance function index out of range");
  const double fx = instance.functions[m](static_cast<Eigen::Index>(index));
  if (fx == 0.0) return 0.0;
  const double mag = std::pow(p.v / (2.0 * p.delta), 1.0 / p.alpha);
  const double prob = std::pow(2.0 * p.delta / p.v, 1.0 / p.alpha) * std::abs(fx);
  return rng.bernoulli(prob) ? std::copysign(mag, fx) : 0.0;
}

bool delta_separated(const HardInstance& instance) {
  const double delta = instance.params.delta;
  const std::size_t count = instance.functions.size();
  std::vector<std::vector<bool>> optimal(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& f = instance.functions[i];
    const double peak = f.maxCoeff();
    optimal[i].resize(static_cast<std::size_t>(f.size()));
    for (Eigen::Index x = 0; x < f.size(); ++x) optimal[i][static_cast<std::size_t>(x)] = f(x) > peak - delta;
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      if (i == j) continue;
      for (std::size_t x = 0; x < optimal[i].size(); ++x) {
        if (optimal[i][x] && optimal[j][x]) return false;
      }
    }
  }
  return true;
}

}  // namespace ldpbo
