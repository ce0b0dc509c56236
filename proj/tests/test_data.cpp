#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "al/data.hpp"
#include "al/errors.hpp"

using namespace al;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("al_data_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

std::vector<unsigned char> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& pixels, std::uint32_t magic = 0x00000803) {
  std::vector<unsigned char> out;
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> out;
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void write_raw(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& p, const std::vector<unsigned char>& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::map<int, std::size_t> class_counts(const Labels& y) {
  std::map<int, std::size_t> out;
  for (int c : y) ++out[c];
  return out;
}

/// Least-squares linear fit on [x, 1] against +-1 targets; training accuracy of its sign.
double linear_fit_accuracy(const LabeledData& d) {
  Eigen::MatrixXd a(d.features.rows(), d.features.cols() + 1);
  a.leftCols(d.features.cols()) = d.features;
  a.col(d.features.cols()).setOnes();
  Eigen::VectorXd target(d.features.rows());
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = d.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(target);
  const Eigen::VectorXd pred = a * w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) correct += (pred(i) > 0.0) == (target(i) > 0.0);
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("idx fixture decodes raw and gzip files identically") {
  TempDir dir;
  const std::vector<unsigned char> pixels{0, 255, 51, 102, 255, 0, 204, 153};
  for (bool gz : {false, true}) {
    const auto images = dir.path / (gz ? "img.gz" : "img");
    const auto labels = dir.path / (gz ? "lab.gz" : "lab");
    (gz ? write_gz : write_raw)(images, idx_images(2, 2, 2, pixels));
    (gz ? write_gz : write_raw)(labels, idx_labels({3, 1}));
    const auto d = load_idx(images, labels);
    REQUIRE(d.features.rows() == 2);
    REQUIRE(d.features.cols() == 4);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      CHECK(d.features(static_cast<Eigen::Index>(i / 4), static_cast<Eigen::Index>(i % 4)) ==
            doctest::Approx(pixels[i] / 255.0).epsilon(1e-15));
    }
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(0, 1) == 1.0);
    CHECK(d.labels == Labels{3, 1});
  }
}

TEST_CASE("idx rejects the wrong magic") {
  TempDir dir;
  write_raw(dir.path / "img", idx_images(1, 1, 1, {7}, 0x00000801));
  write_raw(dir.path / "lab", idx_labels({0}));
  CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "lab"), FormatError);
  write_raw(dir.path / "img", idx_images(1, 1, 1, {7}));
  CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "img"), FormatError);
}

TEST_CASE("idx rejects count mismatches") {
  TempDir dir;
  write_raw(dir.path / "img", idx_images(9, 1, 1, std::vector<unsigned char>(9, 1)));
  write_raw(dir.path / "lab", idx_labels(std::vector<unsigned char>(10, 0)));
  CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "lab"), ConsistencyError);
  write_raw(dir.path / "img", idx_images(2, 2, 2, {1, 2, 3}));
  write_raw(dir.path / "lab", idx_labels({0, 1}));
  CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "lab"), ConsistencyError);
}

TEST_CASE("csv fixture with first-appearance labels") {
  TempDir dir;
  write_text(dir.path / "d.csv", "a,label,b,site\n1.5,cat,2,north\n-3,dog,0.25,south\n4e-1,cat,7,north\n");
  const auto csv = load_csv(dir.path / "d.csv", "label", std::string("site"));
  CHECK(csv.data.features.rows() == 3);
  CHECK(csv.data.features.cols() == 2);
  CHECK(csv.data.labels == Labels{0, 1, 0});
  CHECK(csv.data.groups == std::vector<int>{0, 1, 0});
  CHECK(csv.class_names == std::vector<std::string>{"cat", "dog"});
  CHECK(csv.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(csv.data.features(2, 0) == doctest::Approx(0.4));
  CHECK(csv.data.features(1, 1) == 0.25);
  CHECK(csv.data.k == 2);
}

TEST_CASE("csv errors name the offending row and column") {
  TempDir dir;
  write_text(dir.path / "d.csv", "a,label\n1,cat\nx,dog\n2,cat\n");
  try {
    load_csv(dir.path / "d.csv", "label");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("'a'") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(dir.path / "d.csv", "class"), SchemaError);
  CHECK_THROWS_AS(load_csv(dir.path / "d.csv", "label", std::string("site")), SchemaError);
  write_text(dir.path / "nan.csv", "a,label\nnan,cat\n1,dog\n");
  CHECK_THROWS_AS(load_csv(dir.path / "nan.csv", "label"), ParseError);
  write_text(dir.path / "inf.csv", "a,label\ninf,cat\n1,dog\n");
  CHECK_THROWS_AS(load_csv(dir.path / "inf.csv", "label"), ParseError);
  write_text(dir.path / "short.csv", "a,b,label\n1,cat\n");
  CHECK_THROWS_AS(load_csv(dir.path / "short.csv", "label"), ParseError);
}

TEST_CASE("csv honours quoted fields") {
  TempDir dir;
  write_text(dir.path / "q.csv", "x,label\n1,\"big, cat\"\n2,dog\n");
  const auto csv = load_csv(dir.path / "q.csv", "label");
  CHECK(csv.class_names.front() == "big, cat");
}

TEST_CASE("imbalanced 10-class pool") {
  const int k = 10;
  const std::size_t per_class = 5000;
  Matrix x(static_cast<Eigen::Index>(k * per_class), 1);
  Labels y;
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      x(static_cast<Eigen::Index>(y.size()), 0) = static_cast<double>(y.size());
      y.push_back(c);
    }
  }
  const auto ratios = stepped_imbalance_ratios(k);
  CHECK(ratios.front() == doctest::Approx(0.1));
  CHECK(ratios.back() == 1.0);
  const auto d = make_imbalanced(x, y, ratios, 5);
  CHECK(d.labels.size() == 27500);
  const auto counts = class_counts(d.labels);
  for (int c = 0; c < k; ++c) CHECK(counts.at(c) == 500u * static_cast<std::size_t>(c + 1));
  // Rows are copied verbatim: the feature encodes the source row, whose class is row / 5000.
  std::set<double> seen;
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    const double src = d.features(i, 0);
    CHECK(static_cast<int>(src) / static_cast<int>(per_class) == d.labels[static_cast<std::size_t>(i)]);
    seen.insert(src);
  }
  CHECK(seen.size() == 27500);
  const auto again = make_imbalanced(x, y, ratios, 5);
  CHECK(again.features == d.features);
  CHECK(again.labels == d.labels);
  const auto other = make_imbalanced(x, y, ratios, 6);
  CHECK(other.features != d.features);
}

TEST_CASE("imbalance with all ratios one is the identity") {
  Matrix x(6, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  const Labels y{0, 1, 0, 1, 1, 0};
  const std::vector<double> ones{1.0, 1.0};
  const auto d = make_imbalanced(x, y, ones, 1);
  CHECK(d.features == x);
  CHECK(d.labels == y);
}

TEST_CASE("imbalance errors") {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  const Labels y{0, 0, 1, 1};
  CHECK_THROWS_AS(make_imbalanced(x, y, std::vector<double>{1.0, 0.1}, 1), InvalidConfig);
  CHECK_THROWS_AS(make_imbalanced(x, y, std::vector<double>{1.0, 0.0}, 1), InvalidConfig);
  CHECK_THROWS_AS(make_imbalanced(x, y, std::vector<double>{1.0}, 1), InvalidConfig);
}

TEST_CASE("generators produce exact class counts") {
  const auto g = synth_gaussians(37, {{0, 0}, {3, 0}, {0, 3}}, 1.0, 4);
  CHECK(g.features.rows() == 111);
  CHECK(g.k == 3);
  for (const auto& [c, n] : class_counts(g.labels)) CHECK(n == 37u);
  const auto r = synth_rings(25, {1.0, 2.0, 3.0}, 0.05, 4);
  CHECK(r.features.rows() == 75);
  for (const auto& [c, n] : class_counts(r.labels)) CHECK(n == 25u);
  const auto xr = synth_xor(200, 0.1, 4);
  CHECK(xr.features.rows() == 200);
  CHECK(xr.k == 2);
  CHECK_THROWS_AS(synth_gaussians(0, {{0}, {1}}, 1.0, 1), InvalidConfig);
  CHECK_THROWS_AS(synth_rings(0, {1.0, 2.0}, 0.1, 1), InvalidConfig);
  CHECK_THROWS_AS(synth_xor(0, 0.1, 1), InvalidConfig);
}

TEST_CASE("generators are seed deterministic") {
  CHECK(synth_gaussians(10, {{0, 0}, {1, 1}}, 1.0, 9).features == synth_gaussians(10, {{0, 0}, {1, 1}}, 1.0, 9).features);
  CHECK(synth_gaussians(10, {{0, 0}, {1, 1}}, 1.0, 9).features != synth_gaussians(10, {{0, 0}, {1, 1}}, 1.0, 8).features);
  CHECK(synth_xor(50, 0.2, 3).features == synth_xor(50, 0.2, 3).features);
}

TEST_CASE("well separated gaussians are linearly separable") {
  const auto g = synth_gaussians(1000, {{0.0, 0.0}, {6.0, 0.0}}, 1.0, 21);
  CHECK(linear_fit_accuracy(g) > 0.99);
}

TEST_CASE("rings sit at their radii") {
  const auto r = synth_rings(200, {1.0, 3.0}, 0.05, 2);
  for (Eigen::Index i = 0; i < r.features.rows(); ++i) {
    const double radius = r.features.row(i).norm();
    const double expected = r.labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : 3.0;
    CHECK(std::abs(radius - expected) < 0.05 * 6);
  }
}

TEST_CASE("split with no test fraction keeps everything for training") {
  const auto g = synth_gaussians(20, {{0, 0}, {4, 4}}, 1.0, 1);
  const auto s = split(g, 0.0, 3);
  CHECK(s.test_features.rows() == 0);
  CHECK(s.train_features.rows() == 40);
  CHECK(s.train_features.cols() == 2);
}

TEST_CASE("split is stratified and deterministic") {
  LabeledData d;
  d.k = 3;
  d.features.resize(130, 1);
  const std::size_t sizes[3] = {70, 45, 15};
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      d.features(static_cast<Eigen::Index>(d.labels.size()), 0) = static_cast<double>(d.labels.size());
      d.labels.push_back(c);
    }
  }
  const auto s = split(d, 0.3, 11);
  s.validate();
  const auto test_counts = class_counts(s.test_labels);
  for (int c = 0; c < 3; ++c) {
    const double expected = 0.3 * static_cast<double>(sizes[c]);
    CHECK(std::abs(static_cast<double>(test_counts.at(c)) - expected) <= 1.0);
  }
  CHECK(s.train_features.rows() + s.test_features.rows() == 130);
  std::set<double> rows;
  for (Eigen::Index i = 0; i < s.train_features.rows(); ++i) rows.insert(s.train_features(i, 0));
  for (Eigen::Index i = 0; i < s.test_features.rows(); ++i) rows.insert(s.test_features(i, 0));
  CHECK(rows.size() == 130);
  const auto again = split(d, 0.3, 11);
  CHECK(again.test_features == s.test_features);
  CHECK(again.train_labels == s.train_labels);
  CHECK(split(d, 0.3, 12).test_features != s.test_features);
  CHECK_THROWS_AS(split(d, 1.0, 1), InvalidConfig);
}

TEST_CASE("split validation rejects non-finite features") {
  auto d = synth_gaussians(5, {{0, 0}, {3, 3}}, 1.0, 2);
  d.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(split(d, 0.2, 1).validate(), InvalidInput);
}

TEST_CASE("split keeps test groups aligned with test rows") {
  LabeledData d = synth_gaussians(30, {{0, 0}, {3, 3}}, 1.0, 2);
  for (std::size_t i = 0; i < d.labels.size(); ++i) d.groups.push_back(static_cast<int>(i % 4));
  const auto s = split(d, 0.25, 5);
  REQUIRE(s.test_groups.size() == s.test_labels.size());
}
