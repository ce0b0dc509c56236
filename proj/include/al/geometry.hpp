#pragma once

#include <optional>

#include "al/types.hpp"

namespace al {

struct ClusterResult {
  Matrix centroids;                  // k x d
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  /// Inertia after each Lloyd iteration, used to check monotonicity.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// Squared Euclidean distances, rows of A against rows of B.
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

/// D^2 seeding: first seed proportional to weight, each next proportional to weight * D^2.
IndexList kmeans_pp_seeding(const Matrix& points, std::size_t k, Seed seed,
                            const std::optional<Vector>& weights = std::nullopt);

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;
};

/// Lloyd iterations from k-means++ seeds. Empty clusters are re-seeded to the
/// point farthest from its assigned centroid.
ClusterResult kmeans(const Matrix& points, std::size_t k, Seed seed,
                     const std::optional<Vector>& weights = std::nullopt, KMeansOptions options = {});

/// Average-linkage agglomerative clustering cut at `target_clusters`.
/// Cluster ids are numbered by first appearance in input order.
std::vector<std::size_t> hac_average_linkage(const Matrix& points, std::size_t target_clusters);

struct PcaResult {
  Vector mean;
  Matrix basis;        // dim x d, columns are components
  Vector eigenvalues;  // descending, length d
  Matrix projected;    // n x d
};

/// Mean-centred PCA onto the top-d covariance eigenvectors; d is clamped to the
/// input dimension. Each component's largest-magnitude entry is made nonnegative.
PcaResult pca(const Matrix& points, std::size_t d);

}  // namespace al
