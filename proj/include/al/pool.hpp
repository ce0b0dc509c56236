#pragma once

#include <map>
#include <vector>

#include "al/types.hpp"

namespace al {

/// Labeled / unlabeled partition of the training indices plus budget accounting.
///
/// `labeled` and `unlabeled` are kept sorted ascending. Pseudo-labeled points
/// (CEAL) stay in `unlabeled` and never count toward `spent`.
struct PoolState {
  IndexList labeled;
  IndexList unlabeled;
  std::map<std::size_t, int> pseudo;
  std::size_t spent = 0;
  std::size_t budget_total = 0;
  std::size_t initial_labeled = 0;

  std::size_t size() const { return labeled.size() + unlabeled.size(); }
  bool is_labeled(std::size_t index) const;
  bool is_unlabeled(std::size_t index) const;
  std::size_t remaining_budget() const { return budget_total - spent; }
};

/// Queried indices (distinct, all unlabeled at selection time) with optional scores.
struct AcquisitionBatch {
  IndexList indices;
  std::vector<double> scores;
};

PoolState init_pool(std::size_t n_train, std::size_t m_init, Seed seed, std::size_t budget_total);

/// Moves the batch from unlabeled to labeled. Oracle labels replace pseudo labels.
PoolState apply_selection(PoolState pool, const AcquisitionBatch& batch);

/// Throws ConsistencyError if any PoolState invariant is broken.
void check_pool(const PoolState& pool);

}  // namespace al
