#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "al/config.hpp"
#include "al/experiment.hpp"
#include "al/metrics.hpp"

namespace al {

struct SuiteOptions {
  /// Replaces every config's output_dir; the suite table is written here.
  std::optional<std::filesystem::path> output_dir;
  std::optional<Seed> seed;  // overrides base_seed
  /// Worker threads; 0 reads AL_ENGINE_THREADS, falling back to the hardware count.
  std::size_t threads = 0;
  /// Writes timing.json next to each summary. Off by default so outputs stay byte-stable.
  bool write_timing = false;
};

struct TrialOutcome {
  Seed seed = 0;
  std::optional<TrialResult> result;
  std::string error;
  double seconds = 0.0;
};

struct ConfigOutcome {
  ExperimentConfig config;
  std::filesystem::path directory;
  std::vector<TrialOutcome> trials;
  std::optional<TrialSummary> summary;  // absent when every trial failed
};

struct SuiteResult {
  std::vector<ConfigOutcome> configs;
  AubcTable table;
  std::filesystem::path table_path;
  std::size_t failed_trials = 0;

  bool ok() const { return failed_trials == 0; }
};

/// Worker count from AL_ENGINE_THREADS (if set and positive), else hardware concurrency.
std::size_t default_thread_count();

/// Runs every trial (trial i of a config uses seed base_seed + i), then writes
/// per-trial curve CSVs, per-config summary.json and config.resolved.json, and
/// the suite-level aubc_table.csv. A failing trial is recorded and the rest continue.
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const SuiteOptions& options = {});

/// `round,labeled,accuracy` rows.
std::string format_curve_csv(const BudgetCurve& curve);
BudgetCurve read_curve_csv(const std::filesystem::path& path);

}  // namespace al
