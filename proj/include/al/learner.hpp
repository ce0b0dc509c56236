#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "al/types.hpp"

namespace al {

enum class Optimizer { sgd, adam };

/// Feed-forward ReLU classifier with dropout on hidden activations.
struct LearnerConfig {
  /// Input width, hidden widths..., class count.
  std::vector<int> layer_sizes;
  double dropout_rate = 0.0;
  int epochs = 20;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  int batch_size_train = 64;
  Seed weight_init_seed = 0;
  bool standardize = true;
  double momentum = 0.0;
  double weight_decay = 0.0;

  // Loss-prediction head.
  bool loss_head = false;
  int head_hidden = 16;
  double ranking_margin = 1.0;
  double head_learning_rate = 1e-2;
  double head_loss_weight = 1.0;
  int head_extra_epochs = 20;

  void validate() const;
  bool operator==(const LearnerConfig&) const = default;
  int num_classes() const { return layer_sizes.back(); }
  int input_dim() const { return layer_sizes.front(); }
};

/// y = W x + b with W stored out x in.
struct DenseLayer {
  Matrix weights;
  Vector bias;
};

/// Scalar loss regressor over the concatenated hidden activations.
struct LossHead {
  DenseLayer hidden;
  DenseLayer output;
};

/// Trained (or hand-built) network. Immutable once constructed.
class Snapshot {
 public:
  Snapshot(LearnerConfig config, std::vector<DenseLayer> layers, std::optional<LossHead> head = {},
           Vector input_mean = {}, Vector input_scale = {});

  /// Seeded initialization from `config.weight_init_seed`; identity standardization.
  static Snapshot initialize(const LearnerConfig& config);

  const LearnerConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::optional<LossHead>& head() const { return head_; }
  const Vector& input_mean() const { return input_mean_; }
  const Vector& input_scale() const { return input_scale_; }

  int input_dim() const { return config_.input_dim(); }
  int num_classes() const { return config_.num_classes(); }
  std::size_t hidden_layers() const { return layers_.size() - 1; }
  /// Width of `embed` output.
  int embedding_dim() const;
  /// Total width of all hidden layers (the loss head input).
  int hidden_total() const;

  /// Applies the stored per-feature standardization.
  Matrix standardize(const Matrix& x) const;

 private:
  LearnerConfig config_;
  std::vector<DenseLayer> layers_;
  std::optional<LossHead> head_;
  Vector input_mean_;
  Vector input_scale_;
};

/// T stochastic passes x n samples x k classes.
struct McProbTensor {
  std::size_t passes = 0;
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  McProbTensor() = default;
  McProbTensor(std::size_t t, std::size_t n, std::size_t k) : passes(t), samples(n), classes(k), values(t * n * k) {}

  double& at(std::size_t t, std::size_t i, std::size_t c) { return values[(t * samples + i) * classes + c]; }
  double at(std::size_t t, std::size_t i, std::size_t c) const { return values[(t * samples + i) * classes + c]; }
  std::span<const double> row(std::size_t t, std::size_t i) const {
    return {values.data() + (t * samples + i) * classes, classes};
  }
};

Snapshot train(const LearnerConfig& config, const Matrix& features, const Labels& labels,
               const std::optional<Vector>& sample_weights, Seed seed);

/// Co-trains the classifier and loss head, then trains the head alone on frozen features.
Snapshot train_with_loss_head(const LearnerConfig& config, const Matrix& features, const Labels& labels,
                              Seed seed);

Matrix predict_proba(const Snapshot& snap, const Matrix& x);
Labels predict(const Snapshot& snap, const Matrix& x);
McProbTensor mc_predict(const Snapshot& snap, const Matrix& x, int passes, Seed seed);

/// Post-activation last hidden layer. Without hidden layers, the raw inputs.
Matrix embed(const Snapshot& snap, const Matrix& x);

/// Per row, (p - onehot(argmax p)) outer h(x), flattened class-major (width k * dim h).
Matrix grad_embedding(const Snapshot& snap, const Matrix& x);

/// d CE(x, target) / dx with respect to the raw (unstandardized) input.
Vector input_gradient(const Snapshot& snap, const Vector& x, int target);

Vector predict_loss(const Snapshot& snap, const Matrix& x);

/// Gradients shaped like the network parameters.
struct ParameterGradients {
  double loss = 0.0;
  std::vector<DenseLayer> layers;
  std::optional<LossHead> head;
};

/// Weighted mean cross-entropy and its gradients in deterministic mode.
ParameterGradients classifier_gradients(const Snapshot& snap, const Matrix& x, const Labels& labels,
                                        const std::optional<Vector>& sample_weights = {});

double classifier_loss(const Snapshot& snap, const Matrix& x, const Labels& labels,
                       const std::optional<Vector>& sample_weights = {});

/// Per-sample cross-entropy in deterministic mode.
Vector per_sample_loss(const Snapshot& snap, const Matrix& x, const Labels& labels);

struct RankingLoss {
  double loss = 0.0;
  Vector grad;  // d loss / d predicted
};

/// Pairwise margin ranking loss over pairs (i, i + n/2), averaged over pairs.
/// A pair contributes max(0, -sign(t_i - t_j) (p_i - p_j) + margin).
RankingLoss ranking_loss(const Vector& predicted, const Vector& target, double margin);

/// Ranking loss of the head against `target` losses, with gradients for the head
/// and for the classifier layers feeding it (the co-training path).
ParameterGradients head_gradients(const Snapshot& snap, const Matrix& x, const Vector& target);

void save_snapshot(const Snapshot& snap, const std::filesystem::path& path);
Snapshot load_snapshot(const std::filesystem::path& path);

}  // namespace al
