#include <gtest/gtest.h>

#include <cmath>

#include "semswarm/cmaes.hpp"
#include "semswarm/errors.hpp"

using namespace semswarm;

namespace {

CmaConfig sphere_config(std::uint64_t seed) {
  CmaConfig c;
  c.seed = seed;
  c.sigma0 = 1.0;
  c.sigma_max = 10.0;
  return c;
}

std::vector<double> sphere_losses(const std::vector<Eigen::VectorXd>& pts) {
  std::vector<double> out;
  for (const auto& p : pts) out.push_back(p.squaredNorm());
  return out;
}

}  // namespace

TEST(Codec, MidpointIsZero) {
  for (std::size_t d = 0; d < SwarmParams::kDimension; ++d) {
    const auto& b = kParamBounds[d];
    EXPECT_NEAR(encode_param(d, b.lo + 0.5 * b.range()), 0.0, 1e-15);
    EXPECT_NEAR(decode_param(d, 0.0), b.lo + 0.5 * b.range(), 1e-15);
  }
}

TEST(Codec, LargeZSaturatesAtBounds) {
  for (std::size_t d = 0; d < SwarmParams::kDimension; ++d) {
    const auto& b = kParamBounds[d];
    EXPECT_NEAR(decode_param(d, 20.0), b.hi, 1e-8 * b.range());
    EXPECT_LE(decode_param(d, 800.0), b.hi);
    EXPECT_GE(decode_param(d, -800.0), b.min_valid());
  }
  EXPECT_GT(decode_param(0, -800.0), 0.0);  // open lower bound stays open
}

TEST(Codec, RoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = rng.below(6);
    const auto& b = kParamBounds[d];
    const double x = b.lo + b.range() * rng.uniform(0.01, 0.99);
    ASSERT_NEAR(decode_param(d, encode_param(d, x)), x, 1e-10 * b.range());
  }
}

TEST(Codec, BoundaryValuesThrow) {
  EXPECT_THROW(encode_param(2, 0.0), BoundaryValue);
  EXPECT_THROW(encode_param(2, 2.0), BoundaryValue);
  EXPECT_THROW(encode_param(2, std::nan("")), BoundaryValue);
  EXPECT_THROW(decode_params(Eigen::VectorXd::Zero(5)), DimensionError);
}

TEST(Strategy, DefaultsForSixDimensionsAndSixteenSamples) {
  // Reference values computed independently from the standard formulas.
  const auto s = StrategyParameters::defaults(6, 16);
  EXPECT_EQ(s.weights.size(), 8);
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-15);
  EXPECT_NEAR(s.weights[0], 0.3284362085152189, 1e-14);
  EXPECT_NEAR(s.mu_eff, 4.840914500901174, 1e-12);
  EXPECT_NEAR(s.c_sigma, 0.431850983130551, 1e-14);
  EXPECT_NEAR(s.d_sigma, 1.431850983130551, 1e-14);
  EXPECT_NEAR(s.c_c, 0.4138943382234584, 1e-14);
  EXPECT_NEAR(s.c_1, 0.03440510126447426, 1e-15);
  EXPECT_NEAR(s.c_mu, 0.0885370876343525, 1e-14);
  EXPECT_NEAR(s.chi_n, 2.3506677359645445, 1e-14);
}

TEST(CmaConfig, Validation) {
  CmaConfig c;
  EXPECT_NO_THROW(c.validate());
  c.population_size = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = CmaConfig{};
  c.sigma0 = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = CmaConfig{};
  c.prior_lambda = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Init, IdentityCovarianceAndZeroPaths) {
  const auto theta = SwarmParams::from_array(std::array{0.1, 0.05, 1.0, 1.0, 1.0, 0.01});
  const auto s = cma_init(theta, CmaConfig{});
  EXPECT_EQ(s.covariance, Eigen::MatrixXd::Identity(6, 6));
  EXPECT_EQ(s.p_sigma, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(s.p_c, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(s.sigma, 0.3);
  EXPECT_EQ(s.generation, 0u);
  EXPECT_LT((s.mean - encode_params(theta)).norm(), 1e-15);
  const auto back = decode_params(s.mean).to_array();
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(back[i], theta.to_array()[i], 1e-10);
}

TEST(Init, BoundaryStartIsNudgedInside) {
  const auto p = SwarmParams::from_array(std::array{0.5, 0.1, 0.0, 2.0, 1.0, 0.0});
  const auto s = cma_init(p, CmaConfig{});
  EXPECT_TRUE(s.mean.allFinite());
  const auto back = decode_params(s.mean).to_array();
  const auto want = p.to_array();
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(back[i], want[i], 2e-6 * kParamBounds[i].range());
}

TEST(Ask, SixteenDecodedCandidates) {
  auto s = cma_init(SwarmParams{}, CmaConfig{});
  const auto cands = cma_ask(s);
  ASSERT_EQ(cands.size(), 16u);
  for (const auto& c : cands) {
    EXPECT_EQ(c.params, decode_params(c.z));
    EXPECT_FALSE(c.loss.has_value());
  }
}

TEST(Ask, TinySigmaSamplesTheMean) {
  auto s = cma_init(SwarmParams{}, CmaConfig{});
  s.sigma = 1e-12;
  const auto mean_params = decode_params(s.mean).to_array();
  for (const auto& c : cma_ask(s)) {
    const auto a = c.params.to_array();
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a[i], mean_params[i], 1e-11);
  }
}

TEST(Ask, ClonedStateSamplesIdentically) {
  auto a = cma_init(SwarmParams{}, CmaConfig{});
  auto b = a;
  const auto ca = cma_ask(a);
  const auto cb = cma_ask(b);
  for (std::size_t k = 0; k < ca.size(); ++k) EXPECT_EQ(ca[k].z, cb[k].z);
}

TEST(Tell, TiesKeepSamplingOrder) {
  auto s = cma_init_vector(Eigen::VectorXd::Zero(6), CmaConfig{});
  const auto pts = sample_population(s);
  const std::vector<double> losses(16, 0.5);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < 8; ++i) expected += s.strategy.weights[i] * pts[static_cast<std::size_t>(i)];
  cma_update(s, pts, losses);
  EXPECT_LT((s.mean - expected).norm(), 1e-15);
  EXPECT_EQ(s.best_z, pts[0]);
}

TEST(Tell, MeanMovesToWeightedBest) {
  auto s = cma_init_vector(Eigen::VectorXd::Zero(6), CmaConfig{});
  const auto pts = sample_population(s);
  auto losses = sphere_losses(pts);
  std::vector<std::size_t> order(16);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return losses[a] < losses[b]; });
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < 8; ++i) expected += s.strategy.weights[i] * pts[order[static_cast<std::size_t>(i)]];
  cma_update(s, pts, losses);
  EXPECT_LT((s.mean - expected).norm(), 1e-15);
  EXPECT_EQ(s.generation, 1u);
  EXPECT_EQ(s.evaluations, 16u);
  EXPECT_EQ(s.best_loss, losses[order[0]]);
}

TEST(Tell, SolvesLowDimensionalSphereInFiftyRounds) {
  for (std::size_t d : {2u, 3u}) {
    CmaConfig c;
    c.dimension = d;
    c.seed = 7;
    auto s = cma_init_vector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 5.0), c);
    for (int g = 0; g < 50; ++g) {
      const auto pts = sample_population(s);
      cma_update(s, pts, sphere_losses(pts));
    }
    EXPECT_LT(s.best_loss, 1e-8) << "d=" << d;
  }
}

TEST(Tell, SixDimensionalSphereTracksReferenceProgress) {
  // A reference CMA-ES with the same population reaches 3e-6 .. 9e-4 after 50
  // rounds from 5*1 in six dimensions (seeds 1-5, sigma0 0.3 .. 3).
  auto s = cma_init_vector(Eigen::VectorXd::Constant(6, 5.0), sphere_config(7));
  for (int g = 0; g < 50; ++g) {
    const auto pts = sample_population(s);
    cma_update(s, pts, sphere_losses(pts));
  }
  EXPECT_LT(s.best_loss, 1e-3);
}

TEST(Tell, RejectsBadInput) {
  auto s = cma_init_vector(Eigen::VectorXd::Zero(6), CmaConfig{});
  const auto pts = sample_population(s);
  auto losses = sphere_losses(pts);
  losses[3] = std::nan("");
  EXPECT_THROW(cma_update(s, pts, losses), InvalidFitness);
  losses[3] = INFINITY;
  EXPECT_THROW(cma_update(s, pts, losses), InvalidFitness);
  losses.pop_back();
  EXPECT_THROW(cma_update(s, std::span(pts).first(15), losses), PopulationMismatch);

  auto cands = cma_ask(s);
  EXPECT_THROW(cma_tell(s, cands), InvalidFitness);  // no losses attached
}

TEST(Tell, CovarianceStaysSymmetricPositiveDefinite) {
  auto s = cma_init_vector(Eigen::VectorXd::Constant(6, 1.0), sphere_config(11));
  Rng rng(12);
  for (int g = 0; g < 500; ++g) {
    const auto pts = sample_population(s);
    // Rugged, partly random fitness keeps the update busy.
    std::vector<double> losses;
    for (const auto& p : pts) losses.push_back(std::abs(p[0]) + 100.0 * p[1] * p[1] + rng.uniform());
    cma_update(s, pts, losses);
    ASSERT_LT((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance);
    ASSERT_GT(es.eigenvalues().minCoeff(), 0.0) << "generation " << g;
    ASSERT_TRUE(s.mean.allFinite());
  }
}

TEST(Tell, InvariantToMonotoneFitnessTransforms) {
  auto a = cma_init_vector(Eigen::VectorXd::Constant(6, 2.0), sphere_config(5));
  auto b = a;
  for (int g = 0; g < 20; ++g) {
    const auto pa = sample_population(a);
    const auto pb = sample_population(b);
    auto la = sphere_losses(pa);
    auto lb = sphere_losses(pb);
    for (double& f : lb) f = std::exp(3.0 * f) - 7.0;
    cma_update(a, pa, la);
    cma_update(b, pb, lb);
    ASSERT_EQ(a.mean, b.mean);
    ASSERT_EQ(a.sigma, b.sigma);
    ASSERT_EQ(a.covariance, b.covariance);
  }
}

TEST(Tell, SigmaNeverExceedsCap) {
  CmaConfig c;
  c.sigma0 = 0.9;
  c.sigma_max = 1.0;
  auto s = cma_init_vector(Eigen::VectorXd::Zero(6), c);
  for (int g = 0; g < 30; ++g) {
    const auto pts = sample_population(s);
    std::vector<double> losses;
    for (const auto& p : pts) losses.push_back(-p.squaredNorm());  // run away
    cma_update(s, pts, losses);
    ASSERT_LE(s.sigma, 1.0);
  }
}

TEST(Prior, PenaltyAddsScaledNormalizedDistance) {
  // Offsets of sqrt(0.75) in two normalized dimensions give distance^2 1.5.
  const SwarmParams theta{};
  auto u = normalize(theta);
  const double off = std::sqrt(0.75);
  u[2] += off;
  u[3] -= off;
  const auto p = SwarmParams::from_array(denormalize(u));
  const auto tp = theta.to_array();
  EXPECT_NEAR(prior_penalized_fitness(0.4, p, tp, 0.05), 0.475, 1e-12);
  EXPECT_EQ(prior_penalized_fitness(0.4, p, tp, 0.0), 0.4);
  EXPECT_EQ(prior_penalized_fitness(0.4, theta, tp, 0.05), 0.4);
}

TEST(Diversity, Examples) {
  const auto e = Embedding::basis(0);
  const std::vector<Embedding> opposite{e, -e};
  EXPECT_DOUBLE_EQ(population_diversity(opposite), 2.0);
  const std::vector<Embedding> ortho{Embedding::basis(0), Embedding::basis(1), Embedding::basis(2)};
  EXPECT_DOUBLE_EQ(population_diversity(ortho), 1.0);
  const std::vector<Embedding> one{e};
  EXPECT_EQ(population_diversity(one), 0.0);
  EXPECT_THROW(population_diversity({}), EmptyInput);
}

TEST(DiversityNoise, ThresholdIsExclusive) {
  auto s = cma_init(SwarmParams{}, CmaConfig{});
  const auto before = s.mean;
  EXPECT_FALSE(apply_diversity_noise(s, s.config.diversity_threshold));
  EXPECT_EQ(s.mean, before);
  EXPECT_EQ(s.sigma, 0.3);
}

TEST(DiversityNoise, BoostsSigmaAndPerturbsMean) {
  auto s = cma_init(SwarmParams{}, CmaConfig{});
  const auto before = s.mean;
  EXPECT_TRUE(apply_diversity_noise(s, 0.0));
  EXPECT_NEAR(s.sigma, 0.39, 1e-15);
  EXPECT_NE(s.mean, before);
  EXPECT_LT((s.mean - before).cwiseAbs().maxCoeff(), 6.0 * 0.1 * s.sigma);
}

TEST(DiversityNoise, CappedAtSigmaMax) {
  auto s = cma_init(SwarmParams{}, CmaConfig{});
  s.sigma = 0.95;
  apply_diversity_noise(s, 0.0);
  EXPECT_EQ(s.sigma, 1.0);
}

TEST(Minimize, StopsAtTargetOrBudget) {
  auto sphere = [](const Eigen::VectorXd& z) { return z.squaredNorm(); };
  const auto r = cma_minimize(sphere, Eigen::VectorXd::Constant(6, 3.0), sphere_config(2), 100000, 1e-6);
  EXPECT_LT(r.best_loss, 1e-6);
  EXPECT_EQ(r.evaluations, 16 * r.generations);
  const auto capped = cma_minimize(sphere, Eigen::VectorXd::Constant(6, 3.0), sphere_config(2), 40, 0.0);
  EXPECT_EQ(capped.evaluations, 32u);
}
