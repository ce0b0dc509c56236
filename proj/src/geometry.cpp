#include "al/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "al/errors.hpp"
#include "al/rng.hpp"

namespace al {
namespace {

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

void check_weights(const std::optional<Vector>& weights, Eigen::Index n) {
  if (!weights) return;
  if (weights->size() != n) throw InvalidInput("weights length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!((*weights)(i) >= 0.0) || !std::isfinite((*weights)(i))) throw InvalidInput("weights must be finite and >= 0");
  }
}

/// Nearest centroid, ties to the lower id.
std::pair<std::size_t, double> nearest(const Matrix& points, Eigen::Index i, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = sq_dist(points, i, centroids, c);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return {best, best_d};
}

double assign(const Matrix& points, const Matrix& centroids, const std::optional<Vector>& weights,
              std::vector<std::size_t>& assignment, std::vector<double>& dist) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    auto [c, d] = nearest(points, i, centroids);
    assignment[static_cast<std::size_t>(i)] = c;
    dist[static_cast<std::size_t>(i)] = d;
    inertia += (weights ? (*weights)(i) : 1.0) * d;
  }
  return inertia;
}

}  // namespace

Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("pairwise_sq_dist: width mismatch");
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = sq_dist(a, i, b, j);
  }
  return out;
}

IndexList kmeans_pp_seeding(const Matrix& points, std::size_t k, Seed seed, const std::optional<Vector>& weights) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k > n) throw InvalidInput("kmeans_pp_seeding: k=" + std::to_string(k) + " > n=" + std::to_string(n));
  check_weights(weights, points.rows());
  IndexList chosen;
  if (k == 0) return chosen;
  Rng rng(seed);
  std::vector<double> w(n, 1.0);
  if (weights) {
    for (std::size_t i = 0; i < n; ++i) w[i] = (*weights)(static_cast<Eigen::Index>(i));
  }
  std::vector<bool> taken(n, false);
  auto pick_uniform_free = [&]() {
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i) mass[i] = taken[i] ? 0.0 : 1.0;
    return rng.categorical(mass);
  };
  const double w_total = std::accumulate(w.begin(), w.end(), 0.0);
  std::size_t first = w_total > 0.0 ? rng.categorical(w) : pick_uniform_free();
  chosen.push_back(first);
  taken[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points, static_cast<Eigen::Index>(i), points, static_cast<Eigen::Index>(first));
  std::vector<double> mass(n);
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mass[i] = taken[i] ? 0.0 : w[i] * d2[i];
      total += mass[i];
    }
    // All remaining mass zero (duplicates or zero weights): fall back to uniform over untaken points.
    const std::size_t next = total > 0.0 ? rng.categorical(mass) : pick_uniform_free();
    chosen.push_back(next);
    taken[next] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points, static_cast<Eigen::Index>(i), points, static_cast<Eigen::Index>(next)));
    }
  }
  return chosen;
}

ClusterResult kmeans(const Matrix& points, std::size_t k, Seed seed, const std::optional<Vector>& weights,
                     KMeansOptions options) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > n) throw InvalidInput("kmeans: k=" + std::to_string(k) + " must be in [1, n=" + std::to_string(n) + "]");
  check_weights(weights, points.rows());
  const IndexList seeds = kmeans_pp_seeding(points, k, seed, weights);
  ClusterResult result;
  result.centroids = gather_rows(points, seeds);
  result.assignment.assign(n, 0);
  std::vector<double> dist(n);
  result.inertia = assign(points, result.centroids, weights, result.assignment, dist);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights ? (*weights)(static_cast<Eigen::Index>(i)) : 1.0;
      sums.row(static_cast<Eigen::Index>(result.assignment[i])) += w * points.row(static_cast<Eigen::Index>(i));
      mass[result.assignment[i]] += w;
    }
    Matrix updated = result.centroids;
    std::vector<bool> reseeded(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (mass[c] > 0.0) {
        updated.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / mass[c];
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!reseeded[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      reseeded[far] = true;
      updated.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
    }
    const double shift = (updated - result.centroids).rowwise().norm().maxCoeff();
    result.centroids = std::move(updated);
    result.inertia = assign(points, result.centroids, weights, result.assignment, dist);
    result.inertia_history.push_back(result.inertia);
    result.iterations = iter + 1;
    if (shift < options.tol) break;
  }
  // Report unweighted inertia against the final assignment.
  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) result.inertia += dist[i];
  return result;
}

std::vector<std::size_t> hac_average_linkage(const Matrix& points, std::size_t target_clusters) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (target_clusters < 1 || target_clusters > n) {
    throw InvalidInput("hac_average_linkage: target_clusters must be in [1, " + std::to_string(n) + "]");
  }
  // Condensed distance matrix between active clusters, updated by Lance-Williams.
  auto tri = [n](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  };
  std::vector<double> dist(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[tri(i, j)] = std::sqrt(sq_dist(points, static_cast<Eigen::Index>(i), points, static_cast<Eigen::Index>(j)));
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);

  struct Merge {
    double height;
    std::size_t a, b;
  };
  std::vector<Merge> merges;
  merges.reserve(n);

  // Nearest-neighbour chain: exact for reducible linkages such as average linkage.
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    for (;;) {
      const std::size_t top = chain.back();
      const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : n;
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      if (prev != n) {
        best = prev;
        best_d = dist[tri(top, prev)];
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (!active[j] || j == top) continue;
        const double d = dist[tri(top, j)];
        if (d < best_d || (d == best_d && j < best && best != prev)) {
          best_d = d;
          best = j;
        }
      }
      if (best == prev) {
        chain.pop_back();
        chain.pop_back();
        const std::size_t keep = std::min(top, prev);
        const std::size_t drop = std::max(top, prev);
        merges.push_back({best_d, keep, drop});
        for (std::size_t j = 0; j < n; ++j) {
          if (!active[j] || j == keep || j == drop) continue;
          const double merged = (static_cast<double>(size[keep]) * dist[tri(keep, j)] +
                                 static_cast<double>(size[drop]) * dist[tri(drop, j)]) /
                                static_cast<double>(size[keep] + size[drop]);
          dist[tri(keep, j)] = merged;
        }
        size[keep] += size[drop];
        active[drop] = false;
        --remaining;
        break;
      }
      chain.push_back(best);
    }
  }

  // Replay the lowest n - target merges in height order.
  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t m = 0; m < n - target_clusters; ++m) {
    const std::size_t ra = find(merges[m].a);
    const std::size_t rb = find(merges[m].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> label_of_root(n, n);
  std::vector<std::size_t> assignment(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (label_of_root[r] == n) label_of_root[r] = next++;
    assignment[i] = label_of_root[r];
  }
  return assignment;
}

PcaResult pca(const Matrix& points, std::size_t d) {
  if (points.rows() == 0) throw InvalidInput("pca: no points");
  const auto dim = static_cast<std::size_t>(points.cols());
  d = std::min(d, dim);
  PcaResult out;
  out.mean = points.colwise().mean().transpose();
  const Matrix centred = points.rowwise() - out.mean.transpose();
  const double denom = points.rows() > 1 ? static_cast<double>(points.rows() - 1) : 1.0;
  const Matrix cov = (centred.transpose() * centred) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("pca: eigen decomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  out.basis.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(d));
  out.eigenvalues.resize(static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < d; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(dim - 1 - c);
    Vector v = vectors.col(src);
    Eigen::Index idx;
    v.cwiseAbs().maxCoeff(&idx);
    if (v(idx) < 0.0) v = -v;
    out.basis.col(static_cast<Eigen::Index>(c)) = v;
    out.eigenvalues(static_cast<Eigen::Index>(c)) = values(src);
  }
  out.projected = centred * out.basis;
  return out;
}

}  // namespace al
