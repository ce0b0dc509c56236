// Helpers shared by the test binaries. Oracles here are written from the
// formulas directly and never call into the library code they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "al/learner.hpp"
#include "al/rng.hpp"
#include "al/types.hpp"

namespace testing {

inline std::vector<double> random_simplex(al::Rng& rng, std::size_t k, bool spiky = false) {
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) {
    double u = rng.uniform();
    v = spiky ? std::pow(u, 8.0) : -std::log(1.0 - u);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

inline al::Matrix random_matrix(al::Rng& rng, int rows, int cols, double scale = 1.0) {
  al::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

/// Network with random weights; standardization left as identity.
inline al::Snapshot random_network(std::vector<int> sizes, al::Seed seed, bool with_head = false, double dropout = 0.0) {
  al::LearnerConfig cfg;
  cfg.layer_sizes = std::move(sizes);
  cfg.dropout_rate = dropout;
  cfg.loss_head = with_head;
  cfg.head_hidden = 5;
  cfg.standardize = false;
  al::Rng rng(seed);
  std::vector<al::DenseLayer> layers;
  int hidden_total = 0;
  for (std::size_t l = 1; l < cfg.layer_sizes.size(); ++l) {
    al::DenseLayer layer;
    layer.weights = random_matrix(rng, cfg.layer_sizes[l], cfg.layer_sizes[l - 1], 0.7);
    layer.bias = al::Vector(cfg.layer_sizes[l]);
    for (auto& b : layer.bias) b = 0.3 * rng.normal();
    layers.push_back(std::move(layer));
    if (l + 1 < cfg.layer_sizes.size()) hidden_total += cfg.layer_sizes[l];
  }
  std::optional<al::LossHead> head;
  if (with_head) {
    al::LossHead h;
    h.hidden.weights = random_matrix(rng, cfg.head_hidden, hidden_total, 0.5);
    h.hidden.bias = al::Vector::Constant(cfg.head_hidden, 0.1);
    h.output.weights = random_matrix(rng, 1, cfg.head_hidden, 0.5);
    h.output.bias = al::Vector::Constant(1, 0.0);
    head = std::move(h);
  }
  return al::Snapshot(cfg, std::move(layers), std::move(head));
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline al::Snapshot with_layers(const al::Snapshot& s, std::vector<al::DenseLayer> layers) {
  return al::Snapshot(s.config(), std::move(layers), s.head(), s.input_mean(), s.input_scale());
}

inline al::Snapshot with_head(const al::Snapshot& s, al::LossHead head) {
  return al::Snapshot(s.config(), s.layers(), std::move(head), s.input_mean(), s.input_scale());
}

/// Central differences of `loss` over every entry of `target`, compared with `analytic`.
template <typename Param, typename Loss>
double worst_fd_error(Param& target, const Param& analytic, Loss loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double saved = target.data()[i];
    const double h = 1e-5;
    target.data()[i] = saved + h;
    const double up = loss();
    target.data()[i] = saved - h;
    const double down = loss();
    target.data()[i] = saved;
    worst = std::max(worst, relative_error((up - down) / (2 * h), analytic.data()[i]));
  }
  return worst;
}

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace testing
