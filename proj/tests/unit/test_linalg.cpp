#include <gtest/gtest.h>

#include "semswarm/linalg.hpp"
#include "semswarm/rng.hpp"

using namespace semswarm;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST(Jacobi, MatchesEigenSolver) {
  for (int n : {1, 2, 3, 6, 10, 25}) {
    const Eigen::MatrixXd a = random_symmetric(n, static_cast<std::uint64_t>(n));
    const auto r = jacobi_eigen(a);
    ASSERT_TRUE(r.converged);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    const Eigen::VectorXd expected = ref.eigenvalues().reverse();
    EXPECT_LT((r.values - expected).cwiseAbs().maxCoeff(), 1e-10) << "n=" << n;
    // Each column is a unit eigenvector.
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd v = r.vectors.col(i);
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
      EXPECT_LT((a * v - r.values[i] * v).norm(), 1e-9);
    }
    EXPECT_LT((r.vectors.transpose() * r.vectors - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
  }
}

TEST(Jacobi, DiagonalInputNeedsNoRotation) {
  Eigen::MatrixXd d = Eigen::Vector3d(1.0, 3.0, 2.0).asDiagonal();
  const auto r = jacobi_eigen(d);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.values, Eigen::Vector3d(3.0, 2.0, 1.0));
  EXPECT_EQ(std::abs(r.vectors(1, 0)), 1.0);
}

TEST(Jacobi, ReadsOnlyUpperTriangle) {
  Eigen::MatrixXd a = random_symmetric(5, 9);
  Eigen::MatrixXd b = a;
  b.triangularView<Eigen::StrictlyLower>().setConstant(123.0);
  EXPECT_LT((jacobi_eigen(a).values - jacobi_eigen(b).values).norm(), 1e-12);
}

TEST(Jacobi, ReportsNonConvergenceWhenSweepsRunOut) {
  const auto r = jacobi_eigen(random_symmetric(12, 4), 1e-15, 1);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sweeps, 1);
}
