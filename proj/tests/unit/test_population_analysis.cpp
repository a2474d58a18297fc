#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "semswarm/errors.hpp"
#include "semswarm/population_analysis.hpp"
#include "semswarm/rng.hpp"

using namespace semswarm;

namespace {

std::vector<Row> gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Row> rows(n, Row(d));
  for (auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) r[i] = rng.normal(0.0, 1.0 + static_cast<double>(i));
  }
  return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<Row>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

double brute_inertia(const std::vector<Row>& rows, const KMeansResult& r) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = r.centroids[r.assignments[i]];
    for (std::size_t j = 0; j < c.size(); ++j) total += (rows[i][j] - c[j]) * (rows[i][j] - c[j]);
  }
  return total;
}

}  // namespace

TEST(Pca, CollinearDataHasOneComponent) {
  std::vector<Row> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({1.0 * i, 2.0 * i, -1.0 * i});
  const auto r = pca(rows, 2);
  EXPECT_NEAR(r.explained_variance_ratios[0], 1.0, 1e-12);
  EXPECT_NEAR(r.explained_variance_ratios[1], 0.0, 1e-12);
  const double s = 1.0 / std::sqrt(6.0);
  EXPECT_NEAR(r.components[0][0], s, 1e-12);
  EXPECT_NEAR(r.components[0][1], 2.0 * s, 1e-12);
  EXPECT_NEAR(r.components[0][2], -s, 1e-12);
}

TEST(Pca, FullRankRatiosSumToOne) {
  const auto rows = gaussian_rows(200, 6, 1);
  const auto r = pca(rows, 6);
  const double sum = std::accumulate(r.explained_variance_ratios.begin(),
                                     r.explained_variance_ratios.end(), 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(r.eigenvalues.rbegin(), r.eigenvalues.rend()));
}

TEST(Pca, MatchesEigenOnSampleCovariance) {
  const auto rows = gaussian_rows(300, 5, 2);
  const auto r = pca(rows, 5);
  const Eigen::MatrixXd x = to_matrix(rows);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(rows.size() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(i)], es.eigenvalues()[4 - i], 1e-10);
    const Eigen::VectorXd ref = es.eigenvectors().col(4 - i);
    const Eigen::Map<const Eigen::VectorXd> got(r.components[static_cast<std::size_t>(i)].data(), 5);
    EXPECT_NEAR(std::abs(got.dot(ref)), 1.0, 1e-9);
  }
}

TEST(Pca, ComponentsOrthonormalWithPositiveLeadingEntry) {
  const auto r = pca(gaussian_rows(100, 7, 3), 4);
  for (std::size_t a = 0; a < 4; ++a) {
    const auto& c = r.components[a];
    const auto lead = std::max_element(c.begin(), c.end(), [](double x, double y) {
      return std::abs(x) < std::abs(y);
    });
    EXPECT_GT(*lead, 0.0);
    for (std::size_t b = 0; b < 4; ++b) {
      const double dot = std::inner_product(c.begin(), c.end(), r.components[b].begin(), 0.0);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(Pca, ConstantDataAndErrors) {
  const std::vector<Row> flat(5, Row{1.0, 2.0});
  const auto r = pca(flat, 2);
  EXPECT_EQ(r.explained_variance_ratios, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(pca(std::vector<Row>{{1.0, 2.0}}, 1), InsufficientData);
  EXPECT_THROW(pca(flat, 3), DimensionError);
  EXPECT_THROW(pca(std::vector<Row>{{1.0, 2.0}, {1.0}}, 1), DimensionError);
}

TEST(KMeans, OneClusterPerRowHasZeroInertia) {
  const auto rows = gaussian_rows(12, 3, 4);
  const auto r = kmeans(rows, 12, 1);
  EXPECT_NEAR(r.inertia, 0.0, 1e-20);
  EXPECT_EQ(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size(), 12u);
}

TEST(KMeans, SingleClusterIsTheMean) {
  const auto rows = gaussian_rows(50, 4, 5);
  const auto r = kmeans(rows, 1, 1);
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0.0;
    for (const auto& row : rows) m += row[j];
    EXPECT_NEAR(r.centroids[0][j], m / 50.0, 1e-12);
  }
  EXPECT_NEAR(r.inertia, brute_inertia(rows, r), 1e-9);
}

TEST(KMeans, SeparatesWellSpacedBlobs) {
  Rng rng(6);
  std::vector<Row> rows;
  const std::vector<Row> centers{{0, 0}, {10, 0}, {0, 10}};
  for (int i = 0; i < 90; ++i) {
    const auto& c = centers[static_cast<std::size_t>(i % 3)];
    rows.push_back({c[0] + rng.normal(0, 0.3), c[1] + rng.normal(0, 0.3)});
  }
  const auto r = kmeans(rows, 3, 7);
  for (int i = 3; i < 90; ++i) {
    EXPECT_EQ(r.assignments[static_cast<std::size_t>(i)], r.assignments[static_cast<std::size_t>(i % 3)]);
  }
  EXPECT_EQ(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size(), 3u);
  EXPECT_NEAR(r.inertia, brute_inertia(rows, r), 1e-9);
}

TEST(KMeans, InertiaNonIncreasingAndDeterministic) {
  const auto rows = gaussian_rows(200, 3, 8);
  const auto a = kmeans(rows, 5, 9);
  const auto b = kmeans(rows, 5, 9);
  EXPECT_EQ(a.assignments, b.assignments);
  ASSERT_FALSE(a.inertia_history.empty());
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-12);
  }
  EXPECT_LE(a.iterations, kKMeansMaxIterations);
}

TEST(KMeans, Errors) {
  const auto rows = gaussian_rows(4, 2, 1);
  EXPECT_THROW(kmeans(rows, 5, 1), TooManyClusters);
  EXPECT_THROW(kmeans(rows, 0, 1), InvalidParameter);
}
