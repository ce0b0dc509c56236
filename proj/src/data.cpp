#include "al/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "al/errors.hpp"
#include "al/rng.hpp"

namespace al {
namespace {

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  GzHandle file(gzopen(path.string().c_str(), "rb"));
  if (!file) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buffer[1 << 16];
  for (;;) {
    const int got = gzread(file.get(), buffer, sizeof(buffer));
    if (got < 0) throw FormatError("read error in " + path.string());
    if (got == 0) break;
    bytes.insert(bytes.end(), buffer, buffer + got);
  }
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t offset) {
  if (offset + 4 > b.size()) throw FormatError("idx: truncated header");
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

/// RFC-4180 records: quoted fields may hold commas, newlines and doubled quotes.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in.peek() == '\n') in.get(ch);
      row.push_back(std::move(cell));
      cell.clear();
      if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      cell.push_back(ch);
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(cell));
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
  }
  return rows;
}

int intern(std::map<std::string, int>& ids, std::vector<std::string>& names, const std::string& key) {
  auto [it, inserted] = ids.emplace(key, static_cast<int>(names.size()));
  if (inserted) names.push_back(key);
  return it->second;
}

std::vector<IndexList> rows_by_class(const Labels& labels, int k) {
  std::vector<IndexList> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

LabeledData take_rows(const LabeledData& data, IndexList rows) {
  std::sort(rows.begin(), rows.end());
  LabeledData out;
  out.features = gather_rows(data.features, rows);
  out.k = data.k;
  for (std::size_t r : rows) {
    out.labels.push_back(data.labels[r]);
    if (!data.groups.empty()) out.groups.push_back(data.groups[r]);
  }
  return out;
}

int infer_k(const Labels& labels) {
  int k = 0;
  for (int y : labels) {
    if (y < 0) throw InvalidInput("negative label");
    k = std::max(k, y + 1);
  }
  return std::max(k, 2);
}

}  // namespace

void DatasetSplit::validate() const {
  if (k < 2) throw InvalidInput("dataset: need at least two classes");
  if (train_features.rows() != static_cast<Eigen::Index>(train_labels.size()) ||
      test_features.rows() != static_cast<Eigen::Index>(test_labels.size())) {
    throw InvalidInput("dataset: feature/label count mismatch");
  }
  if (test_features.rows() > 0 && test_features.cols() != train_features.cols()) {
    throw InvalidInput("dataset: train/test widths differ");
  }
  if (!test_groups.empty() && test_groups.size() != test_labels.size()) {
    throw InvalidInput("dataset: group count mismatch");
  }
  for (int y : train_labels)
    if (y < 0 || y >= k) throw InvalidInput("dataset: train label out of range");
  for (int y : test_labels)
    if (y < 0 || y >= k) throw InvalidInput("dataset: test label out of range");
  if (!train_features.allFinite() || !test_features.allFinite()) throw InvalidInput("dataset: non-finite features");
}

LabeledData load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_all(images_path);
  const auto labels = read_all(labels_path);
  if (be32(images, 0) != 0x00000803) throw FormatError("idx: " + images_path.string() + " is not an image tensor (magic 0x00000803)");
  if (be32(labels, 0) != 0x00000801) throw FormatError("idx: " + labels_path.string() + " is not a label vector (magic 0x00000801)");
  const std::size_t n = be32(images, 4);
  const std::size_t rows = be32(images, 8);
  const std::size_t cols = be32(images, 12);
  const std::size_t n_labels = be32(labels, 4);
  if (n != n_labels) {
    throw ConsistencyError("idx: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }
  const std::size_t d = rows * cols;
  if (images.size() != 16 + n * d) throw ConsistencyError("idx: image payload size does not match header");
  if (labels.size() != 8 + n) throw ConsistencyError("idx: label payload size does not match header");
  LabeledData out;
  out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = images[16 + i * d + j] / 255.0;
    }
    out.labels.push_back(labels[8 + i]);
  }
  out.k = infer_k(out.labels);
  return out;
}

CsvData load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::optional<std::string>& group_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_csv: cannot open " + path.string());
  const auto records = parse_csv(in);
  if (records.empty()) throw SchemaError("load_csv: missing header");
  const auto& header = records.front();
  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = column_of(label_column);
  if (!label_col) throw SchemaError("load_csv: missing label column '" + label_column + "'");
  std::optional<std::size_t> group_col;
  if (group_column) {
    group_col = column_of(*group_column);
    if (!group_col) throw SchemaError("load_csv: missing group column '" + *group_column + "'");
  }
  CsvData out;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *label_col || (group_col && c == *group_col)) continue;
    feature_cols.push_back(c);
    out.feature_names.push_back(header[c]);
  }
  const std::size_t n = records.size() - 1;
  out.data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
  std::map<std::string, int> class_ids, group_ids;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::size_t row_no = r + 1;
    if (rec.size() != header.size()) {
      throw ParseError("load_csv: row " + std::to_string(row_no) + " has " + std::to_string(rec.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::string& cell = rec[feature_cols[f]];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
        throw ParseError("load_csv: row " + std::to_string(row_no) + ", column '" + header[feature_cols[f]] +
                         "': invalid numeric value '" + cell + "'");
      }
      out.data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = v;
    }
    out.data.labels.push_back(intern(class_ids, out.class_names, rec[*label_col]));
    if (group_col) out.data.groups.push_back(intern(group_ids, out.group_names, rec[*group_col]));
  }
  out.data.k = static_cast<int>(out.class_names.size());
  return out;
}

LabeledData make_imbalanced(const Matrix& features, const Labels& labels, std::span<const double> ratios, Seed seed) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) throw InvalidInput("make_imbalanced: length mismatch");
  const int k = static_cast<int>(ratios.size());
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw InvalidConfig("make_imbalanced: ratios must be in (0, 1]");
  }
  for (int y : labels) {
    if (y < 0 || y >= k) throw InvalidConfig("make_imbalanced: one ratio per class required");
  }
  LabeledData source{features, labels, {}, k};
  const auto by_class = rows_by_class(labels, k);
  IndexList kept;
  for (int c = 0; c < k; ++c) {
    const auto& rows = by_class[static_cast<std::size_t>(c)];
    const auto keep = static_cast<std::size_t>(std::floor(ratios[static_cast<std::size_t>(c)] * static_cast<double>(rows.size()) + 1e-9));
    if (keep == 0) throw InvalidConfig("make_imbalanced: class " + std::to_string(c) + " would be empty");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t p : rng.sample_without_replacement(rows.size(), keep)) kept.push_back(rows[p]);
  }
  return take_rows(source, kept);
}

std::vector<double> stepped_imbalance_ratios(int classes) {
  std::vector<double> out;
  for (int c = 0; c < classes; ++c) out.push_back(static_cast<double>(c + 1) / static_cast<double>(classes));
  return out;
}

LabeledData synth_gaussians(std::size_t n_per_class, const std::vector<std::vector<double>>& means, double shared_std,
                            Seed seed) {
  if (n_per_class == 0) throw InvalidConfig("synth_gaussians: n_per_class must be positive");
  if (means.size() < 2) throw InvalidConfig("synth_gaussians: need at least two means");
  if (!(shared_std > 0.0)) throw InvalidConfig("synth_gaussians: shared_std must be positive");
  const std::size_t d = means.front().size();
  for (const auto& m : means) {
    if (m.size() != d || d == 0) throw InvalidConfig("synth_gaussians: means must share a positive dimension");
  }
  Rng rng(seed);
  LabeledData out;
  out.k = static_cast<int>(means.size());
  out.features.resize(static_cast<Eigen::Index>(n_per_class * means.size()), static_cast<Eigen::Index>(d));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < means.size(); ++c) {
      for (std::size_t j = 0; j < d; ++j) out.features(row, static_cast<Eigen::Index>(j)) = means[c][j] + shared_std * rng.normal();
      out.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return out;
}

LabeledData synth_xor(std::size_t n, double noise, Seed seed) {
  if (n == 0) throw InvalidConfig("synth_xor: n must be positive");
  if (!(noise >= 0.0)) throw InvalidConfig("synth_xor: noise must be >= 0");
  Rng rng(seed);
  LabeledData out;
  out.k = 2;
  out.features.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double sx = (i % 2 == 0) ? 1.0 : -1.0;
    const double sy = ((i / 2) % 2 == 0) ? 1.0 : -1.0;
    out.features(static_cast<Eigen::Index>(i), 0) = sx + noise * rng.normal();
    out.features(static_cast<Eigen::Index>(i), 1) = sy + noise * rng.normal();
    out.labels.push_back(sx != sy ? 1 : 0);
  }
  return out;
}

LabeledData synth_rings(std::size_t n_per_class, const std::vector<double>& radii, double noise, Seed seed) {
  if (n_per_class == 0) throw InvalidConfig("synth_rings: n_per_class must be positive");
  if (radii.size() < 2) throw InvalidConfig("synth_rings: need at least two radii");
  if (!(noise >= 0.0)) throw InvalidConfig("synth_rings: noise must be >= 0");
  Rng rng(seed);
  LabeledData out;
  out.k = static_cast<int>(radii.size());
  out.features.resize(static_cast<Eigen::Index>(n_per_class * radii.size()), 2);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < radii.size(); ++c) {
      const double angle = 2.0 * M_PI * rng.uniform();
      const double r = radii[c] + noise * rng.normal();
      out.features(row, 0) = r * std::cos(angle);
      out.features(row, 1) = r * std::sin(angle);
      out.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return out;
}

DatasetSplit split(const LabeledData& data, double test_fraction, Seed seed, std::string name) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidConfig("split: test_fraction must be in [0, 1)");
  if (static_cast<Eigen::Index>(data.labels.size()) != data.features.rows()) throw InvalidInput("split: length mismatch");
  if (!data.groups.empty() && data.groups.size() != data.labels.size()) throw InvalidInput("split: group count mismatch");
  const int k = std::max(data.k, infer_k(data.labels));
  const auto by_class = rows_by_class(data.labels, k);
  IndexList test_rows, train_rows;
  for (int c = 0; c < k; ++c) {
    IndexList rows = by_class[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span<std::size_t>(rows));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  LabeledData source = data;
  source.k = k;
  const LabeledData train = take_rows(source, train_rows);
  const LabeledData test = take_rows(source, test_rows);
  DatasetSplit out;
  out.train_features = train.features;
  out.train_labels = train.labels;
  out.test_features = test.features.rows() > 0 ? test.features : Matrix(0, data.features.cols());
  out.test_labels = test.labels;
  out.test_groups = test.groups;
  out.k = k;
  out.name = std::move(name);
  out.validate();
  return out;
}

}  // namespace al
