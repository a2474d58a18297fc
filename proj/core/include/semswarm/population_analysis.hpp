#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace semswarm {

using Row = std::vector<double>;

struct PcaResult {
  std::vector<Row> components;  // unit vectors, descending eigenvalue
  std::vector<double> explained_variance_ratios;
  std::vector<double> eigenvalues;
  Row mean;
};

/// Principal components of the rows via cyclic Jacobi on the sample
/// covariance. Each component's largest-magnitude entry is positive. A zero
/// covariance yields zero ratios.
///
/// Throws InsufficientData for fewer than 2 rows, DimensionError for k > d or
/// ragged rows.
PcaResult pca(std::span<const Row> data, std::size_t k);

/// Same decomposition applied to a given symmetric covariance.
PcaResult pca_from_covariance(const Eigen::MatrixXd& covariance, std::size_t k);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<Row> centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // after each assignment pass
};

inline constexpr std::size_t kKMeansMaxIterations = 100;

/// k-means++ seeding then Lloyd iterations until the assignment is a fixpoint.
/// Throws TooManyClusters for k > rows, InvalidParameter for k = 0.
KMeansResult kmeans(std::span<const Row> data, std::size_t k, std::uint64_t seed);

}  // namespace semswarm
