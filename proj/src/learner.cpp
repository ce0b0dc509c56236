#include "al/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "al/errors.hpp"
#include "al/rng.hpp"

namespace al {
namespace {

void init_dense(DenseLayer& layer, int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  layer.weights.resize(out, in);
  layer.bias.resize(out);
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      layer.weights(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = (2.0 * rng.uniform() - 1.0) * bound;
}

DenseLayer zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.bias.size())};
}

LossHead zeros_like(const LossHead& head) { return {zeros_like(head.hidden), zeros_like(head.output)}; }

Matrix affine(const Matrix& input, const DenseLayer& layer) {
  Matrix z = input * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      p(i, c) = std::exp(logits(i, c) - m);
      total += p(i, c);
    }
    p.row(i) /= total;
  }
  return p;
}

/// Cross-entropy from logits via log-sum-exp.
double cross_entropy(const Matrix& logits, Eigen::Index row, int label) {
  const double m = logits.row(row).maxCoeff();
  double total = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) total += std::exp(logits(row, c) - m);
  return m + std::log(total) - logits(row, label);
}

struct Forward {
  Matrix input;              // standardized
  std::vector<Matrix> pre;   // per layer, before activation
  std::vector<Matrix> relu;  // per hidden layer, before dropout
  std::vector<Matrix> act;   // per hidden layer, after dropout
  std::vector<Matrix> mask;  // per hidden layer, empty when no dropout
  Matrix probs;

  const Matrix& logits() const { return pre.back(); }
  const Matrix& layer_input(std::size_t l) const { return l == 0 ? input : act[l - 1]; }
};

Forward run_forward(const std::vector<DenseLayer>& layers, Matrix input, double dropout, Rng* rng) {
  Forward f;
  f.input = std::move(input);
  const std::size_t n_layers = layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    f.pre.push_back(affine(f.layer_input(l), layers[l]));
    if (l + 1 == n_layers) break;
    Matrix r = f.pre.back().cwiseMax(0.0);
    if (rng != nullptr && dropout > 0.0) {
      Matrix m(r.rows(), r.cols());
      const double keep_scale = 1.0 / (1.0 - dropout);
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng->bernoulli(dropout) ? 0.0 : keep_scale;
      }
      f.act.push_back(r.cwiseProduct(m));
      f.mask.push_back(std::move(m));
    } else {
      f.act.push_back(r);
      f.mask.emplace_back();
    }
    f.relu.push_back(std::move(r));
  }
  f.probs = softmax_rows(f.pre.back());
  return f;
}

/// Backpropagates `dlogits`. `extra_drelu[l]`, when present, is added to the
/// gradient of hidden layer l's pre-dropout activation (loss-head coupling).
void run_backward(const std::vector<DenseLayer>& layers, const Forward& f, Matrix dz,
                  const std::vector<Matrix>* extra_drelu, std::vector<DenseLayer>& grads,
                  Matrix* dinput) {
  grads.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weights = dz.transpose() * f.layer_input(l);
    grads[l].bias = dz.colwise().sum().transpose();
    if (l == 0) {
      if (dinput != nullptr) *dinput = dz * layers[0].weights;
      break;
    }
    Matrix da = dz * layers[l].weights;
    const std::size_t h = l - 1;
    if (f.mask[h].size() != 0) da = da.cwiseProduct(f.mask[h]);
    if (extra_drelu != nullptr) da += (*extra_drelu)[h];
    dz = da.cwiseProduct((f.pre[h].array() > 0.0).cast<double>().matrix());
  }
}

Matrix concat_hidden(const std::vector<Matrix>& parts) {
  Eigen::Index width = 0;
  for (const auto& p : parts) width += p.cols();
  Matrix out(parts.front().rows(), width);
  Eigen::Index col = 0;
  for (const auto& p : parts) {
    out.middleCols(col, p.cols()) = p;
    col += p.cols();
  }
  return out;
}

struct HeadForward {
  Matrix features;
  Matrix hidden_pre;
  Matrix hidden;
  Vector output;
};

HeadForward run_head(const LossHead& head, Matrix features) {
  HeadForward h;
  h.features = std::move(features);
  h.hidden_pre = affine(h.features, head.hidden);
  h.hidden = h.hidden_pre.cwiseMax(0.0);
  h.output = affine(h.hidden, head.output).col(0);
  return h;
}

/// Returns d loss / d features.
Matrix head_backward(const LossHead& head, const HeadForward& h, const Vector& dout, LossHead& grads) {
  Matrix dout_m = dout;
  grads.output.weights = dout_m.transpose() * h.hidden;
  grads.output.bias = dout_m.colwise().sum().transpose();
  Matrix dhidden = dout_m * head.output.weights;
  Matrix dz = dhidden.cwiseProduct((h.hidden_pre.array() > 0.0).cast<double>().matrix());
  grads.hidden.weights = dz.transpose() * h.features;
  grads.hidden.bias = dz.colwise().sum().transpose();
  return dz * head.hidden.weights;
}

std::vector<Matrix> split_hidden(const Matrix& joined, const std::vector<Matrix>& like) {
  std::vector<Matrix> parts;
  Eigen::Index col = 0;
  for (const auto& p : like) {
    parts.emplace_back(joined.middleCols(col, p.cols()));
    col += p.cols();
  }
  return parts;
}

class ParamOptimizer {
 public:
  ParamOptimizer(Optimizer kind, double lr, double momentum, double weight_decay)
      : kind_(kind), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

  void step(std::vector<DenseLayer*> params, const std::vector<const DenseLayer*>& grads) {
    if (first_.empty()) {
      for (auto* p : params) {
        first_.push_back(zeros_like(*p));
        second_.push_back(zeros_like(*p));
      }
    }
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      update(params[i]->weights, grads[i]->weights, first_[i].weights, second_[i].weights);
      update(params[i]->bias, grads[i]->bias, first_[i].bias, second_[i].bias);
    }
  }

 private:
  template <typename T>
  void update(T& param, const T& grad_in, T& first, T& second) {
    T grad = grad_in;
    if (weight_decay_ > 0.0) grad += weight_decay_ * param;
    if (kind_ == Optimizer::sgd) {
      if (momentum_ > 0.0) {
        first = momentum_ * first + grad;
        param -= lr_ * first;
      } else {
        param -= lr_ * grad;
      }
      return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    first = beta1 * first + (1.0 - beta1) * grad;
    second = beta2 * second + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    param.array() -= lr_ * (first.array() / c1) / ((second.array() / c2).sqrt() + eps);
  }

  Optimizer kind_;
  double lr_;
  double momentum_;
  double weight_decay_;
  int t_ = 0;
  std::vector<DenseLayer> first_;
  std::vector<DenseLayer> second_;
};

void check_training_inputs(const LearnerConfig& config, const Matrix& features, const Labels& labels,
                           const std::optional<Vector>& sample_weights) {
  config.validate();
  if (features.rows() == 0) throw InvalidInput("train: empty training set");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw InvalidInput("train: feature rows and labels differ in length");
  }
  if (features.cols() != config.input_dim()) {
    throw ShapeError("train: feature width " + std::to_string(features.cols()) + " != input layer " +
                     std::to_string(config.input_dim()));
  }
  if (!features.allFinite()) throw InvalidInput("train: non-finite features");
  for (int y : labels) {
    if (y < 0 || y >= config.num_classes()) throw InvalidInput("train: label out of range");
  }
  if (sample_weights && static_cast<std::size_t>(sample_weights->size()) != labels.size()) {
    throw InvalidInput("train: sample weight length mismatch");
  }
}

void check_width(const Snapshot& snap, const Matrix& x, const char* op) {
  if (x.cols() != snap.input_dim()) {
    throw ShapeError(std::string(op) + ": feature width " + std::to_string(x.cols()) + " != input layer " +
                     std::to_string(snap.input_dim()));
  }
}

/// Mean CE gradient with respect to logits, each row scaled by its weight.
Matrix ce_logit_grad(const Matrix& probs, std::span<const int> labels, const Vector* weights,
                     std::span<const std::size_t> rows) {
  Matrix d = probs;
  const double inv_n = 1.0 / static_cast<double>(probs.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    const double w = weights ? (*weights)(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)])) : 1.0;
    d.row(i) *= w * inv_n;
  }
  return d;
}

std::pair<Vector, Vector> fit_standardization(const Matrix& features) {
  const Eigen::Index d = features.cols();
  Vector mean = features.colwise().mean().transpose();
  Vector scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (features.col(j).array() - mean(j)).square().mean();
    const double sd = std::sqrt(var);
    scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  return {mean, scale};
}

std::vector<DenseLayer*> layer_ptrs(std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer*> out;
  for (auto& l : layers) out.push_back(&l);
  return out;
}

std::vector<const DenseLayer*> layer_ptrs(const std::vector<DenseLayer>& layers) {
  std::vector<const DenseLayer*> out;
  for (const auto& l : layers) out.push_back(&l);
  return out;
}

Vector sample_losses(const Matrix& logits, std::span<const int> labels) {
  Vector out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) out(i) = cross_entropy(logits, i, labels[static_cast<std::size_t>(i)]);
  return out;
}

LossHead init_head(const LearnerConfig& config, int input_width) {
  Rng rng(derive_seed(config.weight_init_seed, 0x4c50));
  LossHead head;
  init_dense(head.hidden, input_width, config.head_hidden, rng);
  init_dense(head.output, config.head_hidden, 1, rng);
  return head;
}

}  // namespace

void LearnerConfig::validate() const {
  if (layer_sizes.size() < 2) throw InvalidConfig("learner: need at least input and output widths");
  for (int w : layer_sizes) {
    if (w < 1) throw InvalidConfig("learner: layer widths must be positive");
  }
  if (num_classes() < 2) throw InvalidConfig("learner: output width must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidConfig("learner: dropout_rate must be in [0, 1)");
  if (epochs < 0) throw InvalidConfig("learner: epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidConfig("learner: learning_rate must be positive");
  if (batch_size_train < 1) throw InvalidConfig("learner: batch_size_train must be >= 1");
  if (momentum < 0.0 || weight_decay < 0.0) throw InvalidConfig("learner: momentum/weight_decay must be >= 0");
  if (loss_head) {
    if (layer_sizes.size() < 3) throw InvalidConfig("learner: loss head needs a hidden layer");
    if (head_hidden < 1 || !(head_learning_rate > 0.0) || ranking_margin < 0.0 || head_extra_epochs < 0) {
      throw InvalidConfig("learner: invalid loss head settings");
    }
  }
}

Snapshot::Snapshot(LearnerConfig config, std::vector<DenseLayer> layers, std::optional<LossHead> head,
                   Vector input_mean, Vector input_scale)
    : config_(std::move(config)),
      layers_(std::move(layers)),
      head_(std::move(head)),
      input_mean_(std::move(input_mean)),
      input_scale_(std::move(input_scale)) {
  config_.validate();
  if (layers_.size() + 1 != config_.layer_sizes.size()) throw ShapeError("snapshot: layer count mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights.rows() != config_.layer_sizes[l + 1] ||
        layers_[l].weights.cols() != config_.layer_sizes[l] ||
        layers_[l].bias.size() != config_.layer_sizes[l + 1]) {
      throw ShapeError("snapshot: layer " + std::to_string(l) + " shape mismatch");
    }
  }
  const int d = config_.input_dim();
  if (input_mean_.size() == 0) input_mean_ = Vector::Zero(d);
  if (input_scale_.size() == 0) input_scale_ = Vector::Ones(d);
  if (input_mean_.size() != d || input_scale_.size() != d) throw ShapeError("snapshot: standardization width");
  if (head_ && (head_->hidden.weights.cols() != hidden_total() || head_->output.weights.rows() != 1 ||
                head_->output.weights.cols() != head_->hidden.weights.rows())) {
    throw ShapeError("snapshot: loss head shape mismatch");
  }
}

Snapshot Snapshot::initialize(const LearnerConfig& config) {
  config.validate();
  Rng rng(config.weight_init_seed);
  std::vector<DenseLayer> layers(config.layer_sizes.size() - 1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    init_dense(layers[l], config.layer_sizes[l], config.layer_sizes[l + 1], rng);
  }
  return Snapshot(config, std::move(layers));
}

int Snapshot::embedding_dim() const {
  return config_.layer_sizes.size() > 2 ? config_.layer_sizes[config_.layer_sizes.size() - 2] : input_dim();
}

int Snapshot::hidden_total() const {
  int total = 0;
  for (std::size_t l = 1; l + 1 < config_.layer_sizes.size(); ++l) total += config_.layer_sizes[l];
  return total;
}

Matrix Snapshot::standardize(const Matrix& x) const {
  Matrix out = x.rowwise() - input_mean_.transpose();
  return out.array().rowwise() / input_scale_.transpose().array();
}

Snapshot train(const LearnerConfig& config, const Matrix& features, const Labels& labels,
               const std::optional<Vector>& sample_weights, Seed seed) {
  check_training_inputs(config, features, labels, sample_weights);
  std::vector<DenseLayer> layers = Snapshot::initialize(config).layers();
  auto [mean, scale] = config.standardize ? fit_standardization(features)
                                          : std::pair<Vector, Vector>{Vector::Zero(features.cols()),
                                                                      Vector::Ones(features.cols())};
  const Snapshot frame(config, layers, {}, mean, scale);
  const Matrix xs = frame.standardize(features);

  Rng rng(seed);
  ParamOptimizer opt(config.optimizer, config.learning_rate, config.momentum, config.weight_decay);
  const std::size_t n = labels.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size_train), n);
  IndexList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Vector* weights = sample_weights ? &*sample_weights : nullptr;

  std::vector<DenseLayer> grads;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      IndexList rows_vec(rows.begin(), rows.end());
      Labels y(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) y[i] = labels[rows[i]];
      Forward f = run_forward(layers, gather_rows(xs, rows_vec), config.dropout_rate, &rng);
      run_backward(layers, f, ce_logit_grad(f.probs, y, weights, rows), nullptr, grads, nullptr);
      opt.step(layer_ptrs(layers), layer_ptrs(std::as_const(grads)));
    }
  }
  return Snapshot(config, std::move(layers), {}, mean, scale);
}

Snapshot train_with_loss_head(const LearnerConfig& config, const Matrix& features, const Labels& labels,
                              Seed seed) {
  if (!config.loss_head) throw InvalidConfig("train_with_loss_head: loss_head is disabled");
  check_training_inputs(config, features, labels, std::nullopt);
  const Snapshot init = Snapshot::initialize(config);
  std::vector<DenseLayer> layers = init.layers();
  LossHead head = init_head(config, init.hidden_total());
  auto [mean, scale] = config.standardize ? fit_standardization(features)
                                          : std::pair<Vector, Vector>{Vector::Zero(features.cols()),
                                                                      Vector::Ones(features.cols())};
  const Snapshot frame(config, layers, {}, mean, scale);
  const Matrix xs = frame.standardize(features);

  Rng rng(seed);
  ParamOptimizer opt(config.optimizer, config.learning_rate, config.momentum, config.weight_decay);
  ParamOptimizer head_opt(Optimizer::adam, config.head_learning_rate, 0.0, 0.0);
  const std::size_t n = labels.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size_train), n);
  IndexList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<DenseLayer> grads;
  LossHead head_grads = zeros_like(head);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      IndexList rows(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
      Labels y(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) y[i] = labels[rows[i]];
      Forward f = run_forward(layers, gather_rows(xs, rows), config.dropout_rate, &rng);
      const Vector target = sample_losses(f.logits(), y);
      HeadForward hf = run_head(head, concat_hidden(f.relu));
      RankingLoss rank = ranking_loss(hf.output, target, config.ranking_margin);
      const Matrix dfeatures = head_backward(head, hf, config.head_loss_weight * rank.grad, head_grads);
      const std::vector<Matrix> extra = split_hidden(dfeatures, f.relu);
      run_backward(layers, f, ce_logit_grad(f.probs, y, nullptr, rows), &extra, grads, nullptr);
      opt.step(layer_ptrs(layers), layer_ptrs(std::as_const(grads)));
      head_opt.step({&head.hidden, &head.output}, {&head_grads.hidden, &head_grads.output});
    }
  }

  // Frozen classifier: features and target losses no longer change.
  const Forward frozen = run_forward(layers, xs, 0.0, nullptr);
  const Matrix all_features = concat_hidden(frozen.relu);
  const Vector all_targets = sample_losses(frozen.logits(), labels);
  for (int epoch = 0; epoch < config.head_extra_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      IndexList rows(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
      Vector target(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) target(static_cast<Eigen::Index>(i)) = all_targets(static_cast<Eigen::Index>(rows[i]));
      HeadForward hf = run_head(head, gather_rows(all_features, rows));
      RankingLoss rank = ranking_loss(hf.output, target, config.ranking_margin);
      head_backward(head, hf, rank.grad, head_grads);
      head_opt.step({&head.hidden, &head.output}, {&head_grads.hidden, &head_grads.output});
    }
  }
  return Snapshot(config, std::move(layers), std::move(head), mean, scale);
}

Matrix predict_proba(const Snapshot& snap, const Matrix& x) {
  check_width(snap, x, "predict_proba");
  return run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr).probs;
}

Labels predict(const Snapshot& snap, const Matrix& x) {
  const Matrix p = predict_proba(snap, x);
  Labels out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

McProbTensor mc_predict(const Snapshot& snap, const Matrix& x, int passes, Seed seed) {
  if (passes < 1) throw InvalidInput("mc_predict: passes must be >= 1");
  check_width(snap, x, "mc_predict");
  const Matrix xs = snap.standardize(x);
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(snap.num_classes());
  McProbTensor out(static_cast<std::size_t>(passes), n, k);
  for (int t = 0; t < passes; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const Forward f = run_forward(snap.layers(), xs, snap.config().dropout_rate, &rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        out.at(static_cast<std::size_t>(t), i, c) = f.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      }
    }
  }
  return out;
}

Matrix embed(const Snapshot& snap, const Matrix& x) {
  check_width(snap, x, "embed");
  if (snap.hidden_layers() == 0) return x;
  return run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr).act.back();
}

Matrix grad_embedding(const Snapshot& snap, const Matrix& x) {
  check_width(snap, x, "grad_embedding");
  const Forward f = run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr);
  const Matrix& h = snap.hidden_layers() == 0 ? f.input : f.act.back();
  const Eigen::Index k = f.probs.cols();
  const Eigen::Index dim = h.cols();
  Matrix out(x.rows(), k * dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index yhat;
    f.probs.row(i).maxCoeff(&yhat);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double g = f.probs(i, c) - (c == yhat ? 1.0 : 0.0);
      out.row(i).segment(c * dim, dim) = g * h.row(i);
    }
  }
  return out;
}

Vector input_gradient(const Snapshot& snap, const Vector& x, int target) {
  if (x.size() != snap.input_dim()) throw ShapeError("input_gradient: input width mismatch");
  if (target < 0 || target >= snap.num_classes()) throw InvalidInput("input_gradient: target out of range");
  const Matrix row = x.transpose();
  const Forward f = run_forward(snap.layers(), snap.standardize(row), 0.0, nullptr);
  Matrix dlogits = f.probs;
  dlogits(0, target) -= 1.0;
  std::vector<DenseLayer> grads;
  Matrix dinput;
  run_backward(snap.layers(), f, dlogits, nullptr, grads, &dinput);
  return (dinput.row(0).transpose().array() / snap.input_scale().array()).matrix();
}

Vector predict_loss(const Snapshot& snap, const Matrix& x) {
  if (!snap.head()) throw InvalidConfig("predict_loss: snapshot has no loss head");
  check_width(snap, x, "predict_loss");
  const Forward f = run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr);
  return run_head(*snap.head(), concat_hidden(f.relu)).output;
}

ParameterGradients classifier_gradients(const Snapshot& snap, const Matrix& x, const Labels& labels,
                                        const std::optional<Vector>& sample_weights) {
  check_width(snap, x, "classifier_gradients");
  if (static_cast<std::size_t>(x.rows()) != labels.size() || labels.empty()) {
    throw InvalidInput("classifier_gradients: label count mismatch");
  }
  const Forward f = run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr);
  IndexList rows(labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  ParameterGradients out;
  out.loss = classifier_loss(snap, x, labels, sample_weights);
  run_backward(snap.layers(), f, ce_logit_grad(f.probs, labels, sample_weights ? &*sample_weights : nullptr, rows),
               nullptr, out.layers, nullptr);
  return out;
}

double classifier_loss(const Snapshot& snap, const Matrix& x, const Labels& labels,
                       const std::optional<Vector>& sample_weights) {
  const Vector losses = per_sample_loss(snap, x, labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < losses.size(); ++i) total += (sample_weights ? (*sample_weights)(i) : 1.0) * losses(i);
  return total / static_cast<double>(losses.size());
}

Vector per_sample_loss(const Snapshot& snap, const Matrix& x, const Labels& labels) {
  check_width(snap, x, "per_sample_loss");
  const Forward f = run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr);
  return sample_losses(f.logits(), labels);
}

RankingLoss ranking_loss(const Vector& predicted, const Vector& target, double margin) {
  if (predicted.size() != target.size()) throw ShapeError("ranking_loss: length mismatch");
  RankingLoss out;
  out.grad = Vector::Zero(predicted.size());
  const Eigen::Index half = predicted.size() / 2;
  if (half == 0) return out;
  for (Eigen::Index i = 0; i < half; ++i) {
    const Eigen::Index j = i + half;
    const double diff_t = target(i) - target(j);
    const double sign = diff_t > 0.0 ? 1.0 : (diff_t < 0.0 ? -1.0 : 0.0);
    const double value = -sign * (predicted(i) - predicted(j)) + margin;
    if (value > 0.0) {
      out.loss += value;
      out.grad(i) += -sign;
      out.grad(j) += sign;
    }
  }
  out.loss /= static_cast<double>(half);
  out.grad /= static_cast<double>(half);
  return out;
}

ParameterGradients head_gradients(const Snapshot& snap, const Matrix& x, const Vector& target) {
  if (!snap.head()) throw InvalidConfig("head_gradients: snapshot has no loss head");
  check_width(snap, x, "head_gradients");
  const Forward f = run_forward(snap.layers(), snap.standardize(x), 0.0, nullptr);
  const HeadForward hf = run_head(*snap.head(), concat_hidden(f.relu));
  const RankingLoss rank = ranking_loss(hf.output, target, snap.config().ranking_margin);
  ParameterGradients out;
  out.loss = rank.loss;
  out.head = zeros_like(*snap.head());
  const Matrix dfeatures = head_backward(*snap.head(), hf, rank.grad, *out.head);
  const std::vector<Matrix> extra = split_hidden(dfeatures, f.relu);
  run_backward(snap.layers(), f, Matrix::Zero(f.probs.rows(), f.probs.cols()), &extra, out.layers, nullptr);
  return out;
}

// Binary layout, little-endian:
//   "ALSN" u32 version u32 n_dims u32 dims[n_dims] f64 dropout u8 standardize
//   f64 mean[d] f64 scale[d] { f64 W[out*in] row-major, f64 b[out] } per layer
//   u8 has_head [u32 head_hidden f64 margin f64 W1 b1 W2 b2]
namespace {

constexpr std::uint32_t kSnapshotVersion = 1;

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("save_snapshot: cannot open " + path.string());
  }
  template <typename T>
  void put(T value) {
    value = to_little(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  template <typename Derived>
  void put_all(const Eigen::DenseBase<Derived>& values) {
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) put<double>(values(r, c));
  }
  void finish() {
    out_.flush();
    if (!out_) throw Error("save_snapshot: write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error("load_snapshot: cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T value;
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw FormatError("load_snapshot: truncated file");
    return to_little(value);
  }
  template <typename Derived>
  void get_all(Eigen::PlainObjectBase<Derived>& values) {
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) values(r, c) = get<double>();
  }
  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("load_snapshot: truncated file");
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
};

}  // namespace

void save_snapshot(const Snapshot& snap, const std::filesystem::path& path) {
  Writer w(path);
  for (char c : std::string("ALSN")) w.put<char>(c);
  w.put<std::uint32_t>(kSnapshotVersion);
  const auto& dims = snap.config().layer_sizes;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.put<double>(snap.config().dropout_rate);
  w.put<std::uint8_t>(snap.config().standardize ? 1 : 0);
  w.put_all(snap.input_mean());
  w.put_all(snap.input_scale());
  for (const auto& layer : snap.layers()) {
    w.put_all(layer.weights);
    w.put_all(layer.bias);
  }
  w.put<std::uint8_t>(snap.head() ? 1 : 0);
  if (snap.head()) {
    const LossHead& head = *snap.head();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(head.hidden.weights.rows()));
    w.put<double>(snap.config().ranking_margin);
    w.put_all(head.hidden.weights);
    w.put_all(head.hidden.bias);
    w.put_all(head.output.weights);
    w.put_all(head.output.bias);
  }
  w.finish();
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.read_raw(magic, 4);
  if (std::memcmp(magic, "ALSN", 4) != 0) throw FormatError("load_snapshot: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kSnapshotVersion) throw FormatError("load_snapshot: unsupported version " + std::to_string(version));
  const auto n_dims = r.get<std::uint32_t>();
  if (n_dims < 2 || n_dims > 64) throw FormatError("load_snapshot: bad layer count");
  LearnerConfig config;
  for (std::uint32_t i = 0; i < n_dims; ++i) config.layer_sizes.push_back(static_cast<int>(r.get<std::uint32_t>()));
  config.dropout_rate = r.get<double>();
  config.standardize = r.get<std::uint8_t>() != 0;
  const int d = config.input_dim();
  Vector mean(d), scale(d);
  r.get_all(mean);
  r.get_all(scale);
  std::vector<DenseLayer> layers(n_dims - 1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights.resize(config.layer_sizes[l + 1], config.layer_sizes[l]);
    layers[l].bias.resize(config.layer_sizes[l + 1]);
    r.get_all(layers[l].weights);
    r.get_all(layers[l].bias);
  }
  std::optional<LossHead> head;
  if (r.get<std::uint8_t>() != 0) {
    config.loss_head = true;
    config.head_hidden = static_cast<int>(r.get<std::uint32_t>());
    config.ranking_margin = r.get<double>();
    int total = 0;
    for (std::size_t l = 1; l + 1 < config.layer_sizes.size(); ++l) total += config.layer_sizes[l];
    LossHead h;
    h.hidden.weights.resize(config.head_hidden, total);
    h.hidden.bias.resize(config.head_hidden);
    h.output.weights.resize(1, config.head_hidden);
    h.output.bias.resize(1);
    r.get_all(h.hidden.weights);
    r.get_all(h.hidden.bias);
    r.get_all(h.output.weights);
    r.get_all(h.output.bias);
    head = std::move(h);
  }
  if (!r.at_end()) throw FormatError("load_snapshot: trailing bytes");
  return Snapshot(config, std::move(layers), std::move(head), mean, scale);
}

}  // namespace al
