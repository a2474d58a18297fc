#include "semswarm/population_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semswarm/errors.hpp"
#include "semswarm/linalg.hpp"
#include "semswarm/rng.hpp"

namespace semswarm {

namespace {

std::size_t checked_width(std::span<const Row> data) {
  const std::size_t d = data.front().size();
  for (const auto& r : data) {
    if (r.size() != d) throw DimensionError("rows have differing lengths");
  }
  return d;
}

double squared_distance(const Row& a, const Row& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

}  // namespace

PcaResult pca_from_covariance(const Eigen::MatrixXd& covariance, std::size_t k) {
  const auto d = static_cast<std::size_t>(covariance.rows());
  if (k > d) {
    throw DimensionError("requested " + std::to_string(k) + " components of " +
                         std::to_string(d) + " dimensions");
  }
  const SymmetricEigen eig = jacobi_eigen(covariance);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += std::max(eig.values[static_cast<Eigen::Index>(i)], 0.0);

  PcaResult out;
  for (std::size_t c = 0; c < k; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    Row v(d);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < d; ++i) {
      v[i] = eig.vectors(static_cast<Eigen::Index>(i), col);
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    }
    if (v[arg] < 0.0) {
      for (auto& x : v) x = -x;
    }
    const double lambda = eig.values[col];
    out.components.push_back(std::move(v));
    out.eigenvalues.push_back(lambda);
    out.explained_variance_ratios.push_back(trace > 0.0 ? std::max(lambda, 0.0) / trace : 0.0);
  }
  return out;
}

PcaResult pca(std::span<const Row> data, std::size_t k) {
  if (data.size() < 2) throw InsufficientData("pca needs at least 2 rows");
  const std::size_t d = checked_width(data);
  if (k > d) {
    throw DimensionError("requested " + std::to_string(k) + " components of " +
                         std::to_string(d) + " dimensions");
  }
  const auto n = static_cast<double>(data.size());
  Row mean(d, 0.0);
  for (const auto& r : data) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += r[i];
  }
  for (std::size_t i = 0; i < d; ++i) {
    mean[i] /= n;
    // A constant column must center to exact zeros; sum / n can be off by an ulp.
    const bool constant = std::all_of(data.begin(), data.end(),
                                      [&](const Row& r) { return r[i] == data[0][i]; });
    if (constant) mean[i] = data[0][i];
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& r : data) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = r[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) {
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += ci * (r[j] - mean[j]);
      }
    }
  }
  cov /= (n - 1.0);
  cov = cov.selfadjointView<Eigen::Upper>();

  PcaResult out = pca_from_covariance(cov, k);
  out.mean = std::move(mean);
  return out;
}

KMeansResult kmeans(std::span<const Row> data, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw InvalidParameter("k must be positive");
  if (k > data.size()) {
    throw TooManyClusters("k = " + std::to_string(k) + " exceeds " +
                          std::to_string(data.size()) + " rows");
  }
  const std::size_t n = data.size();
  checked_width(data);
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<Row> centroids;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centroids.push_back(data[first]);
  chosen[first] = true;
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(data[i], centroids.back()));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        u -= d2[i];
        if (u < 0.0) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    centroids.push_back(data[pick]);
  }

  KMeansResult out;
  out.assignments.assign(n, k);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(data[i], centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = squared_distance(data[i], centroids[c]);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (out.assignments[i] != best) changed = true;
      out.assignments[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }

    // Empty clusters take the point farthest from its centroid.
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : out.assignments) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[out.assignments[i]] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) continue;
      --sizes[out.assignments[far]];
      out.assignments[far] = c;
      ++sizes[c];
      inertia -= dist[far];
      dist[far] = 0.0;
      centroids[c] = data[far];
      changed = true;
    }

    out.inertia_history.push_back(inertia);
    out.iterations = iter + 1;
    out.inertia = inertia;
    if (!changed) break;

    const std::size_t d = data.front().size();
    std::vector<Row> sums(k, Row(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) sums[out.assignments[i]][j] += data[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        centroids[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
      }
    }
  }
  out.centroids = std::move(centroids);
  return out;
}

}  // namespace semswarm
