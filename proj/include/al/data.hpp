#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "al/types.hpp"

namespace al {

/// Features with class labels; `groups` is empty or one id per row.
struct LabeledData {
  Matrix features;
  Labels labels;
  std::vector<int> groups;
  int k = 0;
};

struct DatasetSplit {
  Matrix train_features;
  Labels train_labels;
  Matrix test_features;
  Labels test_labels;
  std::vector<int> test_groups;
  int k = 0;
  std::string name;

  /// Throws InvalidInput when widths, labels, or finiteness are violated.
  void validate() const;
};

/// Big-endian IDX image tensor (magic 0x00000803) and label vector (0x00000801),
/// gzip or raw. Pixels are scaled to [0, 1] and flattened row-major.
LabeledData load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct CsvData {
  LabeledData data;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // index = label id
  std::vector<std::string> group_names;  // index = group id
};

/// Header-driven CSV. Every column other than the label and group columns is a
/// numeric feature. Labels and groups are numbered by first appearance.
CsvData load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::optional<std::string>& group_column = std::nullopt);

/// Keeps floor(ratio_c * count_c) rows of each class c, rows in original order.
LabeledData make_imbalanced(const Matrix& features, const Labels& labels, std::span<const double> ratios, Seed seed);

/// The 1:2:...:10 ratio vector (0.1, 0.2, ..., 1.0) used for imbalanced 10-class pools.
std::vector<double> stepped_imbalance_ratios(int classes);

LabeledData synth_gaussians(std::size_t n_per_class, const std::vector<std::vector<double>>& means, double shared_std,
                            Seed seed);

/// Points around the four corners (+-1, +-1); label is 1 when the corner signs differ.
LabeledData synth_xor(std::size_t n, double noise, Seed seed);

/// Concentric rings, one class per radius, radial Gaussian noise.
LabeledData synth_rings(std::size_t n_per_class, const std::vector<double>& radii, double noise, Seed seed);

/// Stratified random split; test rows per class = round(test_fraction * count).
DatasetSplit split(const LabeledData& data, double test_fraction, Seed seed, std::string name = "dataset");

}  // namespace al
