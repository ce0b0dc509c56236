#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "al/adversarial.hpp"
#include "al/learner.hpp"
#include "al/pool.hpp"

namespace al {

enum class StrategyKind {
  random,
  entropy,
  margin,
  least_conf,
  var_ratio,
  entropy_d,
  margin_d,
  least_conf_d,
  bald,
  mean_std,
  ceal_entropy,
  kmeans,
  kcenter,
  badge,
  cluster_margin,
  dbal,
  exploit_explore,
  adv_bim,
  lpl,
};

const std::vector<StrategyKind>& all_strategy_kinds();
std::string_view to_string(StrategyKind kind);
/// Exact lowercase name; throws InvalidConfig on unknown names.
StrategyKind parse_strategy_kind(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::random;
  int mc_passes = 10;
  double ceal_threshold = 1e-5;
  double prefilter = 10.0;
  double beta = 1.0;
  int pca_dim = 32;
  BimConfig bim;
  /// Cluster-Margin HAC cut; 0 means ceil(n / 10).
  std::size_t hac_clusters = 0;

  void validate() const;
  bool operator==(const StrategyConfig&) const = default;
};

/// The b largest scores, ties to the smaller candidate index. NaN ranks lowest.
AcquisitionBatch select_top_b(std::span<const double> scores, const IndexList& candidates, std::size_t b);

AcquisitionBatch select_random(const PoolState& pool, std::size_t b, Seed seed);

/// k-means (k = b) over candidate embeddings; the candidate nearest each centroid,
/// falling through to the next-nearest when already taken.
AcquisitionBatch select_kmeans(const Matrix& embeddings, const IndexList& candidates, std::size_t b, Seed seed);

/// Greedy k-center in a PCA projection of the labeled and candidate embeddings.
AcquisitionBatch select_kcenter(const Matrix& labeled_embeddings, const Matrix& candidate_embeddings,
                                const IndexList& candidates, std::size_t b, std::size_t pca_dim);

/// k-means++ seeds over gradient embeddings.
AcquisitionBatch select_badge(const Matrix& grad_embeddings, const IndexList& candidates, std::size_t b, Seed seed);

/// `margin_scores` use the larger-is-less-confident convention; `clusters` holds
/// the HAC cluster id of each candidate.
AcquisitionBatch select_cluster_margin(std::span<const double> margin_scores, std::span<const std::size_t> clusters,
                                       const IndexList& candidates, std::size_t b, double prefilter);

AcquisitionBatch select_dbal(std::span<const double> uncertainty, const Matrix& embeddings,
                             const IndexList& candidates, std::size_t b, double prefilter, Seed seed);

struct CealSelection {
  AcquisitionBatch batch;
  std::map<std::size_t, int> pseudo;
};

/// Entropy top-b plus pseudo labels for every other candidate with entropy < threshold.
CealSelection select_ceal(const Matrix& probs, const IndexList& candidates, std::size_t b, double threshold);

/// Greedy: each step adds argmax entropy(x) - beta / (|S| + 1) * sum_{s in S} cos(x, s).
AcquisitionBatch select_exploit_explore(std::span<const double> entropy_scores, const Matrix& embeddings,
                                        const IndexList& candidates, std::size_t b, double beta);

/// Scores each candidate by -||r|| from the BIM attack (-inf when it never flips).
AcquisitionBatch select_adv_bim(const Snapshot& snap, const Matrix& features, const IndexList& candidates,
                                std::size_t b, const BimConfig& config);

AcquisitionBatch select_lpl(std::span<const double> predicted_losses, const IndexList& candidates, std::size_t b);

}  // namespace al
