#include "al/pool.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "al/errors.hpp"
#include "al/rng.hpp"

namespace al {

bool PoolState::is_labeled(std::size_t index) const {
  return std::binary_search(labeled.begin(), labeled.end(), index);
}

bool PoolState::is_unlabeled(std::size_t index) const {
  return std::binary_search(unlabeled.begin(), unlabeled.end(), index);
}

PoolState init_pool(std::size_t n_train, std::size_t m_init, Seed seed, std::size_t budget_total) {
  if (m_init == 0 || m_init > n_train) {
    throw InvalidConfig("init_pool: m_init must be in [1, n_train], got " + std::to_string(m_init) +
                        " for n_train " + std::to_string(n_train));
  }
  Rng rng(seed);
  PoolState pool;
  pool.labeled = rng.sample_without_replacement(n_train, m_init);
  std::sort(pool.labeled.begin(), pool.labeled.end());
  pool.unlabeled.reserve(n_train - m_init);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n_train; ++i) {
    if (next < pool.labeled.size() && pool.labeled[next] == i) {
      ++next;
    } else {
      pool.unlabeled.push_back(i);
    }
  }
  pool.budget_total = budget_total;
  pool.initial_labeled = m_init;
  return pool;
}

PoolState apply_selection(PoolState pool, const AcquisitionBatch& batch) {
  std::set<std::size_t> seen;
  for (std::size_t index : batch.indices) {
    if (!pool.is_unlabeled(index)) {
      throw ConsistencyError("apply_selection: index " + std::to_string(index) + " is not unlabeled");
    }
    if (!seen.insert(index).second) {
      throw ConsistencyError("apply_selection: duplicate index " + std::to_string(index));
    }
  }
  if (pool.spent + batch.indices.size() > pool.budget_total) {
    throw BudgetError("apply_selection: batch of " + std::to_string(batch.indices.size()) +
                      " exceeds remaining budget " + std::to_string(pool.remaining_budget()));
  }
  IndexList kept;
  kept.reserve(pool.unlabeled.size() - seen.size());
  for (std::size_t index : pool.unlabeled) {
    if (!seen.contains(index)) kept.push_back(index);
  }
  pool.unlabeled = std::move(kept);
  pool.labeled.insert(pool.labeled.end(), seen.begin(), seen.end());
  std::sort(pool.labeled.begin(), pool.labeled.end());
  for (std::size_t index : seen) pool.pseudo.erase(index);
  pool.spent += seen.size();
  return pool;
}

void check_pool(const PoolState& pool) {
  if (!std::is_sorted(pool.labeled.begin(), pool.labeled.end()) ||
      !std::is_sorted(pool.unlabeled.begin(), pool.unlabeled.end())) {
    throw ConsistencyError("pool: index sets must be sorted");
  }
  IndexList both;
  std::set_intersection(pool.labeled.begin(), pool.labeled.end(), pool.unlabeled.begin(),
                        pool.unlabeled.end(), std::back_inserter(both));
  if (!both.empty()) throw ConsistencyError("pool: labeled and unlabeled overlap");
  IndexList all;
  std::merge(pool.labeled.begin(), pool.labeled.end(), pool.unlabeled.begin(), pool.unlabeled.end(),
             std::back_inserter(all));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] != i) throw ConsistencyError("pool: labeled and unlabeled do not cover all indices");
  }
  for (const auto& [index, label] : pool.pseudo) {
    if (!pool.is_unlabeled(index)) throw ConsistencyError("pool: pseudo label on a non-unlabeled index");
  }
  if (pool.spent > pool.budget_total) throw ConsistencyError("pool: spent exceeds budget");
  if (pool.spent + pool.initial_labeled != pool.labeled.size()) {
    throw ConsistencyError("pool: spent does not match labeled growth");
  }
}

}  // namespace al
