#include "al/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "al/errors.hpp"
#include "al/geometry.hpp"
#include "al/rng.hpp"
#include "al/scoring.hpp"

namespace al {
namespace {

constexpr std::array<std::pair<StrategyKind, std::string_view>, 19> kNames{{
    {StrategyKind::random, "random"},
    {StrategyKind::entropy, "entropy"},
    {StrategyKind::margin, "margin"},
    {StrategyKind::least_conf, "least_conf"},
    {StrategyKind::var_ratio, "var_ratio"},
    {StrategyKind::entropy_d, "entropy_d"},
    {StrategyKind::margin_d, "margin_d"},
    {StrategyKind::least_conf_d, "least_conf_d"},
    {StrategyKind::bald, "bald"},
    {StrategyKind::mean_std, "mean_std"},
    {StrategyKind::ceal_entropy, "ceal_entropy"},
    {StrategyKind::kmeans, "kmeans"},
    {StrategyKind::kcenter, "kcenter"},
    {StrategyKind::badge, "badge"},
    {StrategyKind::cluster_margin, "cluster_margin"},
    {StrategyKind::dbal, "dbal"},
    {StrategyKind::exploit_explore, "exploit_explore"},
    {StrategyKind::adv_bim, "adv_bim"},
    {StrategyKind::lpl, "lpl"},
}};

void check_candidates(std::size_t scores, const IndexList& candidates, const char* op) {
  if (scores != candidates.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(scores) + " scores for " +
                     std::to_string(candidates.size()) + " candidates");
  }
}

std::size_t prefilter_size(double prefilter, std::size_t b, std::size_t n) {
  const auto wanted = static_cast<std::size_t>(std::ceil(prefilter * static_cast<double>(b) - 1e-9));
  return std::min(wanted, n);
}

/// Positions into `candidates` ordered as select_top_b would rank them.
std::vector<std::size_t> ranked_positions(std::span<const double> scores, const IndexList& candidates) {
  std::vector<std::size_t> pos(candidates.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  auto key = [&](std::size_t p) {
    const double s = scores[p];
    return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  };
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t c) {
    const double ka = key(a);
    const double kc = key(c);
    if (ka != kc) return ka > kc;
    return candidates[a] < candidates[c];
  });
  return pos;
}

/// For each centroid in order, the nearest not-yet-taken row of `points`.
std::vector<std::size_t> nearest_distinct(const Matrix& points, const Matrix& centroids) {
  const Matrix d = pairwise_sq_dist(centroids, points);
  std::vector<bool> taken(static_cast<std::size_t>(points.rows()), false);
  std::vector<std::size_t> out;
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (!found || d(c, i) < best_d) {
        best = static_cast<std::size_t>(i);
        best_d = d(c, i);
        found = true;
      }
    }
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

AcquisitionBatch all_candidates(const IndexList& candidates) {
  AcquisitionBatch batch;
  batch.indices = candidates;
  return batch;
}

}  // namespace

const std::vector<StrategyKind>& all_strategy_kinds() {
  static const std::vector<StrategyKind> kinds = [] {
    std::vector<StrategyKind> out;
    for (const auto& [kind, name] : kNames) out.push_back(kind);
    return out;
  }();
  return kinds;
}

std::string_view to_string(StrategyKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (const auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  throw InvalidConfig("unknown strategy kind '" + std::string(name) + "'");
}

void StrategyConfig::validate() const {
  if (mc_passes < 1) throw InvalidConfig("strategy: mc_passes must be >= 1");
  if (!(ceal_threshold >= 0.0)) throw InvalidConfig("strategy: ceal_threshold must be >= 0");
  if (!(prefilter >= 1.0)) throw InvalidConfig("strategy: prefilter must be >= 1");
  if (!(beta >= 0.0)) throw InvalidConfig("strategy: beta must be >= 0");
  if (pca_dim < 1) throw InvalidConfig("strategy: pca_dim must be >= 1");
  bim.validate();
}

AcquisitionBatch select_top_b(std::span<const double> scores, const IndexList& candidates, std::size_t b) {
  check_candidates(scores.size(), candidates, "select_top_b");
  const std::vector<std::size_t> pos = ranked_positions(scores, candidates);
  const std::size_t take = std::min(b, candidates.size());
  AcquisitionBatch batch;
  for (std::size_t i = 0; i < take; ++i) {
    batch.indices.push_back(candidates[pos[i]]);
    batch.scores.push_back(scores[pos[i]]);
  }
  return batch;
}

AcquisitionBatch select_random(const PoolState& pool, std::size_t b, Seed seed) {
  Rng rng(seed);
  const std::size_t take = std::min(b, pool.unlabeled.size());
  AcquisitionBatch batch;
  for (std::size_t p : rng.sample_without_replacement(pool.unlabeled.size(), take)) {
    batch.indices.push_back(pool.unlabeled[p]);
  }
  return batch;
}

AcquisitionBatch select_kmeans(const Matrix& embeddings, const IndexList& candidates, std::size_t b, Seed seed) {
  check_candidates(static_cast<std::size_t>(embeddings.rows()), candidates, "select_kmeans");
  if (b >= candidates.size()) return all_candidates(candidates);
  if (b == 0) return {};
  const ClusterResult clusters = kmeans(embeddings, b, seed);
  AcquisitionBatch batch;
  for (std::size_t p : nearest_distinct(embeddings, clusters.centroids)) batch.indices.push_back(candidates[p]);
  return batch;
}

AcquisitionBatch select_kcenter(const Matrix& labeled_embeddings, const Matrix& candidate_embeddings,
                                const IndexList& candidates, std::size_t b, std::size_t pca_dim) {
  check_candidates(static_cast<std::size_t>(candidate_embeddings.rows()), candidates, "select_kcenter");
  if (labeled_embeddings.rows() > 0 && labeled_embeddings.cols() != candidate_embeddings.cols()) {
    throw ShapeError("select_kcenter: embedding widths differ");
  }
  const std::size_t take = std::min(b, candidates.size());
  if (take == 0) return {};
  const Eigen::Index n_lab = labeled_embeddings.rows();
  const Eigen::Index n_unl = candidate_embeddings.rows();
  Matrix joined(n_lab + n_unl, candidate_embeddings.cols());
  if (n_lab > 0) joined.topRows(n_lab) = labeled_embeddings;
  joined.bottomRows(n_unl) = candidate_embeddings;
  const Matrix projected = pca(joined, pca_dim).projected;
  const Matrix unl = projected.bottomRows(n_unl);

  const auto n = static_cast<std::size_t>(n_unl);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::vector<bool> picked(n, false);
  AcquisitionBatch batch;

  auto absorb = [&](const Matrix& centers) {
    const Matrix d = pairwise_sq_dist(unl, centers);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < centers.rows(); ++c) min_d[i] = std::min(min_d[i], d(static_cast<Eigen::Index>(i), c));
    }
  };
  auto take_position = [&](std::size_t p) {
    picked[p] = true;
    batch.indices.push_back(candidates[p]);
    batch.scores.push_back(std::sqrt(min_d[p]));
    absorb(unl.row(static_cast<Eigen::Index>(p)));
  };

  if (n_lab > 0) {
    absorb(projected.topRows(n_lab));
  } else {
    // No labeled centres: start from the point farthest from its nearest neighbour.
    const Matrix d = pairwise_sq_dist(unl, unl);
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) nn = std::min(nn, d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
      if (n == 1) nn = 0.0;
      if (nn > best_d) {
        best_d = nn;
        best = i;
      }
    }
    min_d[best] = best_d;
    take_position(best);
  }
  while (batch.indices.size() < take) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      if (best == n || min_d[i] > min_d[best]) best = i;
    }
    take_position(best);
  }
  return batch;
}

AcquisitionBatch select_badge(const Matrix& grad_embeddings, const IndexList& candidates, std::size_t b, Seed seed) {
  check_candidates(static_cast<std::size_t>(grad_embeddings.rows()), candidates, "select_badge");
  const std::size_t take = std::min(b, candidates.size());
  AcquisitionBatch batch;
  for (std::size_t p : kmeans_pp_seeding(grad_embeddings, take, seed)) batch.indices.push_back(candidates[p]);
  return batch;
}

AcquisitionBatch select_cluster_margin(std::span<const double> margin_scores, std::span<const std::size_t> clusters,
                                       const IndexList& candidates, std::size_t b, double prefilter) {
  check_candidates(margin_scores.size(), candidates, "select_cluster_margin");
  check_candidates(clusters.size(), candidates, "select_cluster_margin");
  if (!(prefilter >= 1.0)) throw InvalidConfig("select_cluster_margin: prefilter must be >= 1");
  const std::vector<std::size_t> ranked = ranked_positions(margin_scores, candidates);
  const std::size_t pool_size = prefilter_size(prefilter, b, candidates.size());

  // Members per cluster, each list already ordered least-confident first.
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < pool_size; ++r) members[clusters[ranked[r]]].push_back(ranked[r]);
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> order(members.begin(), members.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& x, const auto& y) { return x.second.size() < y.second.size(); });

  const std::size_t take = std::min(b, pool_size);
  AcquisitionBatch batch;
  std::vector<std::size_t> cursor(order.size(), 0);
  while (batch.indices.size() < take) {
    for (std::size_t c = 0; c < order.size() && batch.indices.size() < take; ++c) {
      if (cursor[c] >= order[c].second.size()) continue;
      const std::size_t p = order[c].second[cursor[c]++];
      batch.indices.push_back(candidates[p]);
      batch.scores.push_back(margin_scores[p]);
    }
  }
  return batch;
}

AcquisitionBatch select_dbal(std::span<const double> uncertainty, const Matrix& embeddings,
                             const IndexList& candidates, std::size_t b, double prefilter, Seed seed) {
  check_candidates(uncertainty.size(), candidates, "select_dbal");
  check_candidates(static_cast<std::size_t>(embeddings.rows()), candidates, "select_dbal");
  if (!(prefilter >= 1.0)) throw InvalidConfig("select_dbal: prefilter must be >= 1");
  const std::size_t pool_size = prefilter_size(prefilter, b, candidates.size());
  if (pool_size <= b) return select_top_b(uncertainty, candidates, pool_size);
  const std::vector<std::size_t> ranked = ranked_positions(uncertainty, candidates);
  const IndexList rows(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(pool_size));
  const Matrix sub = gather_rows(embeddings, rows);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t p : rows) lowest = std::min(lowest, uncertainty[p]);
  Vector weights(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) weights(static_cast<Eigen::Index>(i)) = uncertainty[rows[i]] - lowest + 1e-12;
  weights /= weights.mean();
  const ClusterResult clusters = kmeans(sub, b, seed, weights);
  AcquisitionBatch batch;
  for (std::size_t p : nearest_distinct(sub, clusters.centroids)) {
    batch.indices.push_back(candidates[rows[p]]);
    batch.scores.push_back(uncertainty[rows[p]]);
  }
  return batch;
}

CealSelection select_ceal(const Matrix& probs, const IndexList& candidates, std::size_t b, double threshold) {
  check_candidates(static_cast<std::size_t>(probs.rows()), candidates, "select_ceal");
  if (!(threshold >= 0.0)) throw InvalidConfig("select_ceal: threshold must be >= 0");
  const std::vector<double> h = score_rows(PointwiseKind::entropy, probs);
  CealSelection out;
  out.batch = select_top_b(h, candidates, b);
  std::vector<std::size_t> chosen = out.batch.indices;
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    if (!(h[p] < threshold) || std::binary_search(chosen.begin(), chosen.end(), candidates[p])) continue;
    Eigen::Index label;
    probs.row(static_cast<Eigen::Index>(p)).maxCoeff(&label);
    out.pseudo.emplace(candidates[p], static_cast<int>(label));
  }
  return out;
}

AcquisitionBatch select_exploit_explore(std::span<const double> entropy_scores, const Matrix& embeddings,
                                        const IndexList& candidates, std::size_t b, double beta) {
  check_candidates(entropy_scores.size(), candidates, "select_exploit_explore");
  check_candidates(static_cast<std::size_t>(embeddings.rows()), candidates, "select_exploit_explore");
  if (!(beta >= 0.0)) throw InvalidConfig("select_exploit_explore: beta must be >= 0");
  const std::size_t n = candidates.size();
  const std::size_t take = std::min(b, n);
  Matrix unit = embeddings;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0.0) unit.row(i) /= norm;
  }
  std::vector<double> similarity_sum(n, 0.0);
  std::vector<bool> picked(n, false);
  AcquisitionBatch batch;
  while (batch.indices.size() < take) {
    const double penalty = beta / static_cast<double>(batch.indices.size() + 1);
    std::size_t best = n;
    double best_value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      const double value = entropy_scores[i] - penalty * similarity_sum[i];
      if (best == n || value > best_value || (value == best_value && candidates[i] < candidates[best])) {
        best = i;
        best_value = value;
      }
    }
    picked[best] = true;
    batch.indices.push_back(candidates[best]);
    batch.scores.push_back(best_value);
    const Vector sims = unit * unit.row(static_cast<Eigen::Index>(best)).transpose();
    for (std::size_t i = 0; i < n; ++i) similarity_sum[i] += sims(static_cast<Eigen::Index>(i));
  }
  return batch;
}

AcquisitionBatch select_adv_bim(const Snapshot& snap, const Matrix& features, const IndexList& candidates,
                                std::size_t b, const BimConfig& config) {
  check_candidates(static_cast<std::size_t>(features.rows()), candidates, "select_adv_bim");
  std::vector<double> scores(candidates.size());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const BimResult r = bim_distance(snap, features.row(i).transpose(), config);
    scores[static_cast<std::size_t>(i)] = r.flipped ? -r.r_norm : -std::numeric_limits<double>::infinity();
  }
  return select_top_b(scores, candidates, b);
}

AcquisitionBatch select_lpl(std::span<const double> predicted_losses, const IndexList& candidates, std::size_t b) {
  return select_top_b(predicted_losses, candidates, b);
}

}  // namespace al
