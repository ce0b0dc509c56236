#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "al/learner.hpp"
#include "al/selection.hpp"

namespace al {

/// Where a trial's data comes from. Synthetic kinds are regenerated from the
/// trial seed unless `seed` pins them.
struct DatasetSource {
  std::string kind = "gaussians";  // gaussians | xor | rings | idx | csv
  std::string name;

  std::size_t n_per_class = 500;
  std::vector<std::vector<double>> means{{-1.0, 0.0}, {1.0, 0.0}};
  double std_dev = 1.0;
  std::size_t n = 1000;
  double noise = 0.1;
  std::vector<double> radii{1.0, 2.0};

  std::string images;
  std::string labels;
  std::string test_images;
  std::string test_labels;
  std::string path;
  std::string test_path;
  std::string label_column = "label";
  std::string group_column;

  double test_fraction = 0.25;
  std::size_t subset = 0;  // 0 keeps every training row
  std::vector<double> imbalance;
  std::optional<Seed> seed;

  bool operator==(const DatasetSource&) const = default;
  std::string display_name() const { return name.empty() ? kind : name; }
};

struct ExperimentConfig {
  std::string name;
  std::string label;  // method name in league tables; defaults to the strategy kind
  DatasetSource dataset;
  std::vector<int> hidden{32};
  LearnerConfig learner;  // layer_sizes is filled per dataset
  StrategyConfig strategy;
  std::size_t m_init = 0;
  std::size_t b = 0;
  std::size_t budget = 0;
  int trials = 3;
  Seed base_seed = 0;
  std::string output_dir = "results";
  bool include_round0 = true;

  bool operator==(const ExperimentConfig&) const = default;
  void validate() const;
  /// Learner settings with input and output widths attached.
  LearnerConfig learner_for(int input_dim, int classes) const;
};

/// Parses one experiment object. Unknown keys are rejected; errors name the JSON path.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// A file holding one experiment object or an array of them.
std::vector<ExperimentConfig> parse_config_file(const std::filesystem::path& path);

/// Fully resolved form, every default included.
nlohmann::json emit_config(const ExperimentConfig& config);

}  // namespace al
