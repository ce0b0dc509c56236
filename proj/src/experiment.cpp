#include "al/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "al/errors.hpp"
#include "al/geometry.hpp"
#include "al/rng.hpp"
#include "al/scoring.hpp"

namespace al {
namespace {

enum SeedStream : std::uint64_t {
  kPoolStream = 1,
  kInitStream = 1000,
  kTrainStream = 2000,
  kSelectStream = 3000,
};

std::optional<PointwiseKind> pointwise_kind(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::entropy:
    case StrategyKind::entropy_d:
      return PointwiseKind::entropy;
    case StrategyKind::margin:
    case StrategyKind::margin_d:
      return PointwiseKind::margin;
    case StrategyKind::least_conf:
    case StrategyKind::least_conf_d:
      return PointwiseKind::least_conf;
    case StrategyKind::var_ratio:
      return PointwiseKind::var_ratio;
    default:
      return std::nullopt;
  }
}

bool is_dropout_variant(StrategyKind kind) {
  return kind == StrategyKind::entropy_d || kind == StrategyKind::margin_d || kind == StrategyKind::least_conf_d;
}

std::vector<std::size_t> cluster_training_pool(const ExperimentConfig& config, const DatasetSplit& data,
                                               const Snapshot& model) {
  const auto n = static_cast<std::size_t>(data.train_features.rows());
  std::size_t target = config.strategy.hac_clusters;
  if (target == 0) target = (n + 9) / 10;
  target = std::clamp<std::size_t>(target, 1, n);
  return hac_average_linkage(embed(model, data.train_features), target);
}

}  // namespace

Acquisition acquire(const AcquisitionContext& ctx, const Snapshot& model, const PoolState& pool, std::size_t b,
                    Seed seed) {
  const StrategyConfig& s = ctx.strategy;
  const IndexList& cand = pool.unlabeled;
  Acquisition out;
  if (cand.empty() || b == 0) return out;
  auto features = [&] { return gather_rows(ctx.data.train_features, cand); };

  if (s.kind == StrategyKind::random) {
    out.batch = select_random(pool, b, seed);
    return out;
  }
  if (auto kind = pointwise_kind(s.kind)) {
    const std::vector<double> scores =
        is_dropout_variant(s.kind) ? score_mc_pointwise(*kind, mc_predict(model, features(), s.mc_passes, seed))
                                   : score_rows(*kind, predict_proba(model, features()));
    out.batch = select_top_b(scores, cand, b);
    return out;
  }
  switch (s.kind) {
    case StrategyKind::bald:
      out.batch = select_top_b(score_bald(mc_predict(model, features(), s.mc_passes, seed)), cand, b);
      break;
    case StrategyKind::mean_std:
      out.batch = select_top_b(score_meanstd(mc_predict(model, features(), s.mc_passes, seed)), cand, b);
      break;
    case StrategyKind::ceal_entropy: {
      CealSelection sel = select_ceal(predict_proba(model, features()), cand, b, s.ceal_threshold);
      out.batch = std::move(sel.batch);
      out.pseudo = std::move(sel.pseudo);
      break;
    }
    case StrategyKind::kmeans:
      out.batch = select_kmeans(embed(model, features()), cand, b, seed);
      break;
    case StrategyKind::kcenter:
      out.batch = select_kcenter(embed(model, gather_rows(ctx.data.train_features, pool.labeled)),
                                 embed(model, features()), cand, b, static_cast<std::size_t>(s.pca_dim));
      break;
    case StrategyKind::badge:
      out.batch = select_badge(grad_embedding(model, features()), cand, b, seed);
      break;
    case StrategyKind::cluster_margin: {
      if (ctx.clusters == nullptr) throw InvalidConfig("cluster_margin: clusters were not computed");
      std::vector<std::size_t> ids;
      for (std::size_t index : cand) ids.push_back((*ctx.clusters)[index]);
      out.batch = select_cluster_margin(score_rows(PointwiseKind::margin, predict_proba(model, features())), ids, cand,
                                        b, s.prefilter);
      break;
    }
    case StrategyKind::dbal: {
      const Matrix x = features();
      out.batch = select_dbal(score_rows(PointwiseKind::margin, predict_proba(model, x)), embed(model, x), cand, b,
                              s.prefilter, seed);
      break;
    }
    case StrategyKind::exploit_explore: {
      const Matrix x = features();
      out.batch = select_exploit_explore(score_rows(PointwiseKind::entropy, predict_proba(model, x)), embed(model, x),
                                         cand, b, s.beta);
      break;
    }
    case StrategyKind::adv_bim:
      out.batch = select_adv_bim(model, features(), cand, b, s.bim);
      break;
    case StrategyKind::lpl: {
      const Vector losses = predict_loss(model, features());
      out.batch = select_lpl(std::span<const double>(losses.data(), static_cast<std::size_t>(losses.size())), cand, b);
      break;
    }
    default:
      throw InvalidConfig("acquire: unhandled strategy " + std::string(to_string(s.kind)));
  }
  return out;
}

Snapshot fit_round(const ExperimentConfig& config, const DatasetSplit& data, const PoolState& pool, Seed seed) {
  IndexList rows = pool.labeled;
  Labels labels;
  for (std::size_t r : rows) labels.push_back(data.train_labels[r]);
  for (const auto& [index, label] : pool.pseudo) {
    rows.push_back(index);
    labels.push_back(label);
  }
  LearnerConfig lc = config.learner_for(static_cast<int>(data.train_features.cols()), data.k);
  lc.weight_init_seed = derive_seed(seed, kInitStream);
  const Matrix x = gather_rows(data.train_features, rows);
  const Seed train_seed = derive_seed(seed, kTrainStream);
  if (lc.loss_head) return train_with_loss_head(lc, x, labels, train_seed);
  return train(lc, x, labels, std::nullopt, train_seed);
}

double accuracy(const Snapshot& model, const Matrix& x, const Labels& y) {
  if (y.empty()) throw InvalidInput("accuracy: empty evaluation set");
  const Labels pred = predict(model, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

TrialResult run_trial(const ExperimentConfig& config, const DatasetSplit& data, Seed seed) {
  config.validate();
  data.validate();
  const auto n_train = static_cast<std::size_t>(data.train_features.rows());
  if (data.test_labels.empty()) throw InvalidConfig("run_trial: dataset has no test split");
  if (config.m_init > n_train) throw InvalidConfig("run_trial: m_init exceeds the training pool");
  if (config.budget > n_train - config.m_init) {
    throw InvalidConfig("run_trial: Q=" + std::to_string(config.budget) + " exceeds the unlabeled pool of " +
                        std::to_string(n_train - config.m_init));
  }

  TrialResult result;
  PoolState pool = init_pool(n_train, config.m_init, derive_seed(seed, kPoolStream), config.budget);
  auto record = [&](std::size_t round, const Snapshot& model) {
    RoundRecord rec;
    rec.round = round;
    rec.labeled = pool.labeled.size();
    rec.spent = pool.spent;
    rec.accuracy = accuracy(model, data.test_features, data.test_labels);
    rec.pseudo_labeled = pool.pseudo.size();
    for (const auto& [index, label] : pool.pseudo) rec.pseudo_errors += label != data.train_labels[index] ? 1 : 0;
    result.rounds.push_back(rec);
    result.pseudo_history.push_back(pool.pseudo);
    result.curve.points.push_back({rec.labeled, rec.accuracy});
  };

  Snapshot model = fit_round(config, data, pool, derive_seed(seed, 0));
  record(0, model);

  std::vector<std::size_t> clusters;
  if (config.strategy.kind == StrategyKind::cluster_margin) clusters = cluster_training_pool(config, data, model);
  const AcquisitionContext ctx{data, config.strategy, clusters.empty() ? nullptr : &clusters};

  const std::size_t rounds = (config.budget + config.b - 1) / config.b;
  for (std::size_t round = 1; round <= rounds; ++round) {
    const std::size_t request = std::min(config.b, pool.remaining_budget());
    Acquisition acq = acquire(ctx, model, pool, request, derive_seed(seed, kSelectStream + round));
    if (acq.batch.indices.size() != std::min(request, pool.unlabeled.size())) {
      throw ConsistencyError("run_trial: strategy returned " + std::to_string(acq.batch.indices.size()) +
                             " points, expected " + std::to_string(request));
    }
    result.candidate_pools.push_back(pool.unlabeled);
    pool = apply_selection(std::move(pool), acq.batch);
    if (acq.pseudo) {
      pool.pseudo.clear();
      for (const auto& [index, label] : *acq.pseudo) {
        if (pool.is_unlabeled(index)) pool.pseudo.emplace(index, label);
      }
    }
    result.selections.push_back(std::move(acq.batch));
    model = fit_round(config, data, pool, derive_seed(seed, round));
    record(round, model);
  }
  check_pool(pool);
  result.final_pool = std::move(pool);
  return result;
}

TrialResult run_experiment(const ExperimentConfig& config, const DatasetSplit& data) {
  return run_trial(config, data, config.base_seed);
}

DatasetSplit make_dataset(const DatasetSource& source, Seed seed) {
  const Seed data_seed = source.seed.value_or(seed);
  LabeledData train;
  std::optional<LabeledData> test;
  if (source.kind == "gaussians") {
    train = synth_gaussians(source.n_per_class, source.means, source.std_dev, data_seed);
  } else if (source.kind == "xor") {
    train = synth_xor(source.n, source.noise, data_seed);
  } else if (source.kind == "rings") {
    train = synth_rings(source.n_per_class, source.radii, source.noise, data_seed);
  } else if (source.kind == "idx") {
    if (source.images.empty() || source.labels.empty()) throw InvalidConfig("idx dataset needs images and labels");
    train = load_idx(source.images, source.labels);
    if (!source.test_images.empty()) test = load_idx(source.test_images, source.test_labels);
  } else if (source.kind == "csv") {
    if (source.path.empty()) throw InvalidConfig("csv dataset needs a path");
    const std::optional<std::string> group =
        source.group_column.empty() ? std::nullopt : std::optional<std::string>(source.group_column);
    train = load_csv(source.path, source.label_column, group).data;
    if (!source.test_path.empty()) test = load_csv(source.test_path, source.label_column, group).data;
  } else {
    throw InvalidConfig("unknown dataset kind '" + source.kind + "'");
  }
  if (source.subset > 0 && source.subset < train.labels.size()) {
    Rng rng(derive_seed(seed, 77));
    IndexList rows = rng.sample_without_replacement(train.labels.size(), source.subset);
    std::sort(rows.begin(), rows.end());
    LabeledData sub;
    sub.features = gather_rows(train.features, rows);
    sub.k = train.k;
    for (std::size_t r : rows) {
      sub.labels.push_back(train.labels[r]);
      if (!train.groups.empty()) sub.groups.push_back(train.groups[r]);
    }
    train = std::move(sub);
  }
  if (!source.imbalance.empty()) {
    train = make_imbalanced(train.features, train.labels, source.imbalance, derive_seed(seed, 78));
  }
  if (!test) return split(train, source.test_fraction, derive_seed(seed, 79), source.display_name());

  DatasetSplit out;
  out.k = std::max(train.k, test->k);
  out.train_features = std::move(train.features);
  out.train_labels = std::move(train.labels);
  out.test_features = std::move(test->features);
  out.test_labels = std::move(test->labels);
  out.test_groups = std::move(test->groups);
  out.name = source.display_name();
  out.validate();
  return out;
}

}  // namespace al
