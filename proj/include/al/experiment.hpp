#pragma once

#include <map>
#include <optional>
#include <vector>

#include "al/config.hpp"
#include "al/data.hpp"
#include "al/metrics.hpp"
#include "al/pool.hpp"

namespace al {

struct RoundRecord {
  std::size_t round = 0;
  std::size_t labeled = 0;
  std::size_t spent = 0;
  double accuracy = 0.0;
  std::size_t pseudo_labeled = 0;
  std::size_t pseudo_errors = 0;  // pseudo labels disagreeing with ground truth
};

struct TrialResult {
  BudgetCurve curve;
  std::vector<RoundRecord> rounds;
  /// Batch chosen in each acquisition round, with the unlabeled pool it was drawn from.
  std::vector<AcquisitionBatch> selections;
  std::vector<IndexList> candidate_pools;
  /// Pseudo-label set used to train each round (CEAL), index -> label.
  std::vector<std::map<std::size_t, int>> pseudo_history;
  PoolState final_pool;
};

/// Context shared by all rounds of one trial.
struct AcquisitionContext {
  const DatasetSplit& data;
  const StrategyConfig& strategy;
  /// HAC cluster id per training index (Cluster-Margin only).
  const std::vector<std::size_t>* clusters = nullptr;
};

struct Acquisition {
  AcquisitionBatch batch;
  std::optional<std::map<std::size_t, int>> pseudo;  // replaces the pool's pseudo set when present
};

/// Runs one strategy against the current model and pool.
Acquisition acquire(const AcquisitionContext& ctx, const Snapshot& model, const PoolState& pool, std::size_t b,
                    Seed seed);

/// Fresh model on the labeled set plus any pseudo-labeled points.
Snapshot fit_round(const ExperimentConfig& config, const DatasetSplit& data, const PoolState& pool, Seed seed);

double accuracy(const Snapshot& model, const Matrix& x, const Labels& y);

/// One full acquire -> label -> retrain loop. Evaluates after initial training and
/// after every round; ceil(Q / b) rounds, the last one truncated to Q mod b.
TrialResult run_trial(const ExperimentConfig& config, const DatasetSplit& data, Seed seed);

/// run_trial with the config's base seed.
TrialResult run_experiment(const ExperimentConfig& config, const DatasetSplit& data);

/// Builds a trial's dataset: generate or load, subsample, imbalance, then split.
DatasetSplit make_dataset(const DatasetSource& source, Seed seed);

}  // namespace al
