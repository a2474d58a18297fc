#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semswarm/rng.hpp"
#include "semswarm/semantic.hpp"
#include "semswarm/swarm.hpp"

namespace semswarm {

struct CmaConfig {
  std::size_t population_size = 16;
  double sigma0 = 0.3;
  std::size_t dimension = SwarmParams::kDimension;
  std::size_t max_generations = 100;
  std::uint64_t seed = 1;
  double prior_lambda = 0.05;
  double diversity_threshold = 0.05;
  double noise_boost = 1.3;
  double sigma_max = 1.0;

  std::size_t mu() const { return population_size / 2; }

  /// Throws ConfigError unless 2 <= mu < lambda and 0 < sigma0 <= sigma_max.
  void validate() const;
};

/// Default strategy parameters as functions of dimension d and mu_eff.
struct StrategyParameters {
  Eigen::VectorXd weights;  // positive, sum to 1, length mu
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E|N(0, I)|

  static StrategyParameters defaults(std::size_t dimension, std::size_t lambda);
};

struct BranchOrigin {
  std::string parent_run_id;
  std::size_t generation = 0;
  std::size_t candidate_index = 0;

  friend bool operator==(const BranchOrigin&, const BranchOrigin&) = default;
};

struct CmaState {
  CmaConfig config;
  StrategyParameters strategy;
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd basis;  // B, with covariance = B diag(scales^2) B^T
  Eigen::VectorXd scales;  // D
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  std::size_t generation = 0;
  std::size_t evaluations = 0;
  Rng rng;
  Eigen::VectorXd best_z;
  double best_loss = std::numeric_limits<double>::infinity();
  std::optional<BranchOrigin> parent;
};

struct Candidate {
  Eigen::VectorXd z;
  SwarmParams params;  // decode(z)
  std::optional<double> loss;
};

// Bounded-parameter codec: per-dimension logistic squash R -> (lo, hi).

/// Throws BoundaryValue when x is not strictly inside (lo, hi).
double encode_param(std::size_t dim, double x);
double decode_param(std::size_t dim, double z);
Eigen::VectorXd encode_params(const SwarmParams& p);
SwarmParams decode_params(const Eigen::VectorXd& z);

/// Mean at `mean` (any dimension), identity covariance, zero paths.
CmaState cma_init_vector(const Eigen::VectorXd& mean, const CmaConfig& config);

/// Mean at encode(theta_init); boundary values are nudged inward by 1e-6 of
/// the range before encoding.
CmaState cma_init(const SwarmParams& theta_init, const CmaConfig& config);

/// Draws lambda points z_k = mean + sigma * B * D * N(0, I).
std::vector<Eigen::VectorXd> sample_population(CmaState& state);

/// sample_population plus decoding into swarm parameters.
std::vector<Candidate> cma_ask(CmaState& state);

/// Rank-based update from lambda points and their losses. Ties keep sampling
/// order. Throws InvalidFitness on a NaN/inf loss and PopulationMismatch on a
/// wrong count.
void cma_update(CmaState& state, std::span<const Eigen::VectorXd> points,
                std::span<const double> losses);

void cma_tell(CmaState& state, std::span<const Candidate> candidates);

/// loss + prior_lambda * |normalize(params) - normalize(theta_prompt)|^2.
double prior_penalized_fitness(double loss, const SwarmParams& params,
                               std::span<const double> theta_prompt, double prior_lambda);

/// Mean pairwise cosine distance (1 - cos) over unordered pairs; 0 for one
/// embedding.
double population_diversity(std::span<const Embedding> embeddings);

/// When diversity < threshold: sigma <- min(sigma * noise_boost, sigma_max)
/// and the mean is perturbed by N(0, (0.1 sigma)^2 I). Returns whether noise
/// was injected.
bool apply_diversity_noise(CmaState& state, double diversity);

struct MinimizeResult {
  Eigen::VectorXd best_z;
  double best_loss = 0.0;
  std::size_t evaluations = 0;
  std::size_t generations = 0;
};

/// Runs ask/update until target loss or evaluation budget is reached.
MinimizeResult cma_minimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const Eigen::VectorXd& start, const CmaConfig& config,
                            std::size_t max_evaluations, double target_loss);

}  // namespace semswarm
