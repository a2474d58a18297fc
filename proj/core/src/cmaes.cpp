#include "semswarm/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semswarm/errors.hpp"
#include "semswarm/linalg.hpp"

namespace semswarm {

void CmaConfig::validate() const {
  if (dimension == 0) throw ConfigError("dimension must be positive");
  if (mu() < 2 || mu() >= population_size) {
    throw ConfigError("population size must satisfy 2 <= mu < lambda");
  }
  if (!(sigma_max > 0.0) || !(sigma0 > 0.0) || sigma0 > sigma_max) {
    throw ConfigError("sigma0 must lie in (0, sigma_max]");
  }
  if (!(prior_lambda >= 0.0)) throw ConfigError("prior_lambda must be >= 0");
  if (!(noise_boost >= 1.0)) throw ConfigError("noise_boost must be >= 1");
}

StrategyParameters StrategyParameters::defaults(std::size_t dimension, std::size_t lambda) {
  const auto d = static_cast<double>(dimension);
  const std::size_t mu = lambda / 2;
  StrategyParameters s;
  s.weights.resize(static_cast<Eigen::Index>(mu));
  for (std::size_t i = 0; i < mu; ++i) {
    s.weights[static_cast<Eigen::Index>(i)] =
        std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  s.c_sigma = (s.mu_eff + 2.0) / (d + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (d + 1.0)) - 1.0) +
              s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / d) / (d + 4.0 + 2.0 * s.mu_eff / d);
  s.c_1 = 2.0 / ((d + 1.3) * (d + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                                     ((d + 2.0) * (d + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
  return s;
}

double encode_param(std::size_t dim, double x) {
  const auto& b = kParamBounds.at(dim);
  const double u = (x - b.lo) / b.range();
  if (!(u > 0.0 && u < 1.0)) {
    throw BoundaryValue(std::string(b.name) + " value is not strictly inside its bounds");
  }
  return std::log(u) - std::log1p(-u);
}

double decode_param(std::size_t dim, double z) {
  const auto& b = kParamBounds.at(dim);
  const double u = 1.0 / (1.0 + std::exp(-z));
  return std::clamp(b.lo + b.range() * u, b.min_valid(), b.hi);
}

Eigen::VectorXd encode_params(const SwarmParams& p) {
  const auto a = p.to_array();
  Eigen::VectorXd z(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) z[static_cast<Eigen::Index>(i)] = encode_param(i, a[i]);
  return z;
}

SwarmParams decode_params(const Eigen::VectorXd& z) {
  if (z.size() != static_cast<Eigen::Index>(SwarmParams::kDimension)) {
    throw DimensionError("search vector must have 6 entries");
  }
  std::array<double, SwarmParams::kDimension> a{};
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = decode_param(i, z[static_cast<Eigen::Index>(i)]);
  return SwarmParams::from_array(a);
}

namespace {

constexpr double kMaxCondition = 1e14;
constexpr double kRepairFraction = 1e-12;

bool decompose(CmaState& s) {
  const Eigen::MatrixXd sym = 0.5 * (s.covariance + s.covariance.transpose());
  s.covariance = sym;
  const SymmetricEigen eig = jacobi_eigen(sym);
  const double max_ev = eig.values.maxCoeff();
  const double min_ev = eig.values.minCoeff();
  if (!(min_ev > 0.0) || max_ev / min_ev > kMaxCondition) return false;
  s.basis = eig.vectors;
  s.scales = eig.values.cwiseSqrt();
  return true;
}

void update_decomposition(CmaState& s) {
  if (decompose(s)) return;
  const auto n = s.covariance.rows();
  s.covariance += kRepairFraction * s.covariance.trace() * Eigen::MatrixXd::Identity(n, n);
  if (!decompose(s)) {
    const SymmetricEigen eig = jacobi_eigen(s.covariance);
    if (!(eig.values.minCoeff() > 0.0)) {
      throw CovarianceError("covariance is not positive-definite after repair");
    }
    s.basis = eig.vectors;
    s.scales = eig.values.cwiseSqrt();
  }
}

}  // namespace

CmaState cma_init_vector(const Eigen::VectorXd& mean, const CmaConfig& config) {
  config.validate();
  if (mean.size() != static_cast<Eigen::Index>(config.dimension)) {
    throw DimensionError("initial mean does not match the configured dimension");
  }
  const auto n = mean.size();
  CmaState s;
  s.config = config;
  s.strategy = StrategyParameters::defaults(config.dimension, config.population_size);
  s.mean = mean;
  s.sigma = config.sigma0;
  s.covariance = Eigen::MatrixXd::Identity(n, n);
  s.basis = Eigen::MatrixXd::Identity(n, n);
  s.scales = Eigen::VectorXd::Ones(n);
  s.p_sigma = Eigen::VectorXd::Zero(n);
  s.p_c = Eigen::VectorXd::Zero(n);
  s.rng = Rng(config.seed);
  s.best_z = mean;
  return s;
}

CmaState cma_init(const SwarmParams& theta_init, const CmaConfig& config) {
  if (config.dimension != SwarmParams::kDimension) {
    throw ConfigError("swarm parameter search is 6-dimensional");
  }
  auto a = theta_init.to_array();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& b = kParamBounds[i];
    const double nudge = 1e-6 * b.range();
    a[i] = std::clamp(a[i], b.lo + nudge, b.hi - nudge);
  }
  return cma_init_vector(encode_params(SwarmParams::from_array(a)), config);
}

std::vector<Eigen::VectorXd> sample_population(CmaState& state) {
  if (!(state.scales.minCoeff() > 0.0)) {
    throw CovarianceError("covariance is not positive-definite");
  }
  const auto n = state.mean.size();
  const Eigen::MatrixXd bd = state.basis * state.scales.asDiagonal();
  std::vector<Eigen::VectorXd> out;
  out.reserve(state.config.population_size);
  for (std::size_t k = 0; k < state.config.population_size; ++k) {
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = state.rng.normal();
    out.push_back(state.mean + state.sigma * (bd * g));
  }
  return out;
}

std::vector<Candidate> cma_ask(CmaState& state) {
  auto points = sample_population(state);
  std::vector<Candidate> out;
  out.reserve(points.size());
  for (auto& z : points) {
    Candidate c;
    c.params = decode_params(z);
    c.z = std::move(z);
    out.push_back(std::move(c));
  }
  return out;
}

void cma_update(CmaState& state, std::span<const Eigen::VectorXd> points,
                std::span<const double> losses) {
  const std::size_t lambda = state.config.population_size;
  if (points.size() != lambda || losses.size() != lambda) {
    throw PopulationMismatch("expected " + std::to_string(lambda) + " evaluated candidates, got " +
                             std::to_string(std::min(points.size(), losses.size())));
  }
  for (double f : losses) {
    if (!std::isfinite(f)) throw InvalidFitness("candidate loss is not finite");
  }
  const auto& sp = state.strategy;
  const auto n = state.mean.size();
  const double d = static_cast<double>(n);

  std::vector<std::size_t> order(lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });

  if (losses[order[0]] < state.best_loss) {
    state.best_loss = losses[order[0]];
    state.best_z = points[order[0]];
  }

  const Eigen::VectorXd old_mean = state.mean;
  const std::size_t mu = state.config.mu();
  Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < mu; ++i) {
    new_mean += sp.weights[static_cast<Eigen::Index>(i)] * points[order[i]];
  }
  state.mean = new_mean;
  const Eigen::VectorXd y_w = (new_mean - old_mean) / state.sigma;

  // C^{-1/2} y_w = B D^{-1} B^T y_w
  const Eigen::VectorXd c_inv_sqrt_y =
      state.basis * (state.basis.transpose() * y_w).cwiseQuotient(state.scales);
  state.p_sigma = (1.0 - sp.c_sigma) * state.p_sigma +
                  std::sqrt(sp.c_sigma * (2.0 - sp.c_sigma) * sp.mu_eff) * c_inv_sqrt_y;

  const double gens = static_cast<double>(state.generation + 1);
  const double ps_norm = state.p_sigma.norm();
  const double h_sigma_lhs =
      ps_norm / std::sqrt(1.0 - std::pow(1.0 - sp.c_sigma, 2.0 * gens));
  const bool h_sigma = h_sigma_lhs < (1.4 + 2.0 / (d + 1.0)) * sp.chi_n;

  state.p_c = (1.0 - sp.c_c) * state.p_c;
  if (h_sigma) state.p_c += std::sqrt(sp.c_c * (2.0 - sp.c_c) * sp.mu_eff) * y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < mu; ++i) {
    const Eigen::VectorXd y = (points[order[i]] - old_mean) / state.sigma;
    rank_mu += sp.weights[static_cast<Eigen::Index>(i)] * (y * y.transpose());
  }
  const double delta_h = h_sigma ? 0.0 : sp.c_c * (2.0 - sp.c_c);
  state.covariance = (1.0 - sp.c_1 - sp.c_mu + sp.c_1 * delta_h) * state.covariance +
                     sp.c_1 * (state.p_c * state.p_c.transpose()) + sp.c_mu * rank_mu;

  state.sigma *= std::exp((sp.c_sigma / sp.d_sigma) * (ps_norm / sp.chi_n - 1.0));
  state.sigma = std::min(state.sigma, state.config.sigma_max);
  if (!(state.sigma > 0.0)) state.sigma = std::numeric_limits<double>::min();

  update_decomposition(state);
  ++state.generation;
  state.evaluations += lambda;
}

void cma_tell(CmaState& state, std::span<const Candidate> candidates) {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> losses;
  points.reserve(candidates.size());
  losses.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!c.loss) throw InvalidFitness("candidate has no loss");
    points.push_back(c.z);
    losses.push_back(*c.loss);
  }
  cma_update(state, points, losses);
}

double prior_penalized_fitness(double loss, const SwarmParams& params,
                               std::span<const double> theta_prompt, double prior_lambda) {
  if (prior_lambda == 0.0) return loss;
  const auto a = normalize(params);
  const auto b = normalize(theta_prompt);
  double dist2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dist2 += (a[i] - b[i]) * (a[i] - b[i]);
  return loss + prior_lambda * dist2;
}

double population_diversity(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) throw EmptyInput("no embeddings");
  const std::size_t n = embeddings.size();
  if (n == 1) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      total += 1.0 - cosine_similarity(embeddings[i], embeddings[j]);
    }
  }
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

bool apply_diversity_noise(CmaState& state, double diversity) {
  if (!(diversity < state.config.diversity_threshold)) return false;
  state.sigma = std::min(state.sigma * state.config.noise_boost, state.config.sigma_max);
  const double spread = 0.1 * state.sigma;
  for (Eigen::Index i = 0; i < state.mean.size(); ++i) state.mean[i] += spread * state.rng.normal();
  return true;
}

MinimizeResult cma_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const Eigen::VectorXd& start, const CmaConfig& config,
                            std::size_t max_evaluations, double target_loss) {
  CmaState state = cma_init_vector(start, config);
  std::vector<double> losses(config.population_size);
  while (state.evaluations + config.population_size <= max_evaluations &&
         state.best_loss >= target_loss) {
    const auto points = sample_population(state);
    for (std::size_t k = 0; k < points.size(); ++k) losses[k] = objective(points[k]);
    cma_update(state, points, losses);
  }
  return {state.best_z, state.best_loss, state.evaluations, state.generation};
}

}  // namespace semswarm
