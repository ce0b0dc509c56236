#include "al/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "al/errors.hpp"

namespace al {
namespace {

void check_probs(std::span<const double> p) {
  if (p.empty()) throw InvalidInput("score: empty probability vector");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidInput("score: negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw InvalidInput("score: probabilities do not sum to 1");
}

/// Largest and second-largest entries.
std::pair<double, double> top_two(std::span<const double> p) {
  double first = -1.0;
  double second = -1.0;
  for (double v : p) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return {first, second < 0.0 ? 0.0 : second};
}

std::vector<double> mean_row(const McProbTensor& mc, std::size_t i) {
  std::vector<double> mean(mc.classes, 0.0);
  for (std::size_t t = 0; t < mc.passes; ++t) {
    for (std::size_t c = 0; c < mc.classes; ++c) mean[c] += mc.at(t, i, c);
  }
  for (double& v : mean) v /= static_cast<double>(mc.passes);
  return mean;
}

}  // namespace

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double score_pointwise(PointwiseKind kind, std::span<const double> p) {
  check_probs(p);
  switch (kind) {
    case PointwiseKind::entropy:
      return entropy(p);
    case PointwiseKind::margin: {
      auto [first, second] = top_two(p);
      return -(first - second);
    }
    case PointwiseKind::least_conf:
      return -*std::max_element(p.begin(), p.end());
    case PointwiseKind::var_ratio:
      return 1.0 - *std::max_element(p.begin(), p.end());
  }
  return 0.0;
}

std::vector<double> score_rows(PointwiseKind kind, const Matrix& probs) {
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        score_pointwise(kind, std::span<const double>(probs.row(i).data(), static_cast<std::size_t>(probs.cols())));
  }
  return out;
}

std::vector<double> score_mc_pointwise(PointwiseKind kind, const McProbTensor& mc) {
  std::vector<double> out(mc.samples);
  for (std::size_t i = 0; i < mc.samples; ++i) out[i] = score_pointwise(kind, mean_row(mc, i));
  return out;
}

std::vector<double> score_bald(const McProbTensor& mc) {
  std::vector<double> out(mc.samples, 0.0);
  if (mc.passes < 2) return out;
  for (std::size_t i = 0; i < mc.samples; ++i) {
    double mean_h = 0.0;
    for (std::size_t t = 0; t < mc.passes; ++t) {
      check_probs(mc.row(t, i));
      mean_h += entropy(mc.row(t, i));
    }
    mean_h /= static_cast<double>(mc.passes);
    out[i] = entropy(mean_row(mc, i)) - mean_h;
  }
  return out;
}

std::vector<double> score_meanstd(const McProbTensor& mc) {
  std::vector<double> out(mc.samples, 0.0);
  for (std::size_t i = 0; i < mc.samples; ++i) {
    const std::vector<double> mean = mean_row(mc, i);
    double total = 0.0;
    for (std::size_t c = 0; c < mc.classes; ++c) {
      double var = 0.0;
      for (std::size_t t = 0; t < mc.passes; ++t) {
        const double d = mc.at(t, i, c) - mean[c];
        var += d * d;
      }
      total += std::sqrt(var / static_cast<double>(mc.passes));
    }
    out[i] = total / static_cast<double>(mc.classes);
  }
  return out;
}

}  // namespace al
