#include "al/config.hpp"

#include <fstream>
#include <set>

#include "al/errors.hpp"

namespace al {
namespace {

using nlohmann::json;

std::string type_name(const json& v) { return v.type_name(); }

/// Reads keys from one JSON object and rejects anything left unread.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(where() + ": expected object, got " + type_name(obj_));
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& require(const std::string& key) {
    if (!obj_.contains(key)) throw SchemaError("missing required key '" + child(key) + "'");
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void optional(const std::string& key, T& out) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(obj_.at(key), child(key));
  }

  template <typename T>
  T get(const std::string& key) {
    return convert<T>(require(key), child(key));
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw SchemaError("unknown key '" + child(key) + "'");
    }
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }
  std::string where() const { return path_.empty() ? "/" : path_; }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    auto mismatch = [&](const char* expected) {
      return ParseError(path + ": expected " + expected + ", got " + type_name(v));
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw mismatch("boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw mismatch("string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw mismatch("number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw mismatch("integer");
      return v.get<int>();
    } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, Seed>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw mismatch("nonnegative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::optional<Seed>>) {
      if (v.is_null()) return std::nullopt;
      return convert<Seed>(v, path);
    } else {
      // std::vector<U>
      if (!v.is_array()) throw mismatch("array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], path + "/" + std::to_string(i)));
      }
      return out;
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

DatasetSource parse_dataset(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  DatasetSource d;
  d.kind = r.get<std::string>("kind");
  r.optional("name", d.name);
  r.optional("n_per_class", d.n_per_class);
  r.optional("means", d.means);
  r.optional("std", d.std_dev);
  r.optional("n", d.n);
  r.optional("noise", d.noise);
  r.optional("radii", d.radii);
  r.optional("images", d.images);
  r.optional("labels", d.labels);
  r.optional("test_images", d.test_images);
  r.optional("test_labels", d.test_labels);
  r.optional("path", d.path);
  r.optional("test_path", d.test_path);
  r.optional("label_column", d.label_column);
  r.optional("group_column", d.group_column);
  r.optional("test_fraction", d.test_fraction);
  r.optional("subset", d.subset);
  r.optional("imbalance", d.imbalance);
  r.optional("seed", d.seed);
  r.finish();
  static const std::set<std::string> kinds{"gaussians", "xor", "rings", "idx", "csv"};
  if (!kinds.contains(d.kind)) throw InvalidConfig(path + "/kind: unknown dataset kind '" + d.kind + "'");
  return d;
}

void parse_learner(const json& doc, const std::string& path, ExperimentConfig& cfg) {
  ObjectReader r(doc, path);
  LearnerConfig& l = cfg.learner;
  r.optional("hidden", cfg.hidden);
  r.optional("dropout", l.dropout_rate);
  r.optional("epochs", l.epochs);
  r.optional("learning_rate", l.learning_rate);
  if (r.has("optimizer")) {
    const auto name = r.get<std::string>("optimizer");
    if (name == "adam") {
      l.optimizer = Optimizer::adam;
    } else if (name == "sgd") {
      l.optimizer = Optimizer::sgd;
    } else {
      throw InvalidConfig(r.child("optimizer") + ": expected 'adam' or 'sgd'");
    }
  }
  r.optional("batch_size", l.batch_size_train);
  r.optional("standardize", l.standardize);
  r.optional("momentum", l.momentum);
  r.optional("weight_decay", l.weight_decay);
  r.optional("loss_head", l.loss_head);
  r.optional("head_hidden", l.head_hidden);
  r.optional("ranking_margin", l.ranking_margin);
  r.optional("head_learning_rate", l.head_learning_rate);
  r.optional("head_loss_weight", l.head_loss_weight);
  r.optional("head_extra_epochs", l.head_extra_epochs);
  r.finish();
}

StrategyConfig parse_strategy(const json& doc, const std::string& path) {
  StrategyConfig s;
  if (doc.is_string()) {
    s.kind = parse_strategy_kind(doc.get<std::string>());
    return s;
  }
  ObjectReader r(doc, path);
  s.kind = parse_strategy_kind(r.get<std::string>("kind"));
  r.optional("mc_passes", s.mc_passes);
  r.optional("ceal_threshold", s.ceal_threshold);
  r.optional("prefilter", s.prefilter);
  r.optional("beta", s.beta);
  r.optional("pca_dim", s.pca_dim);
  r.optional("bim_step", s.bim.step);
  r.optional("bim_max_steps", s.bim.max_steps);
  if (r.has("bim_norm")) {
    const auto name = r.get<std::string>("bim_norm");
    if (name == "linf") {
      s.bim.norm = BimNorm::linf;
    } else if (name == "l2") {
      s.bim.norm = BimNorm::l2;
    } else {
      throw InvalidConfig(r.child("bim_norm") + ": expected 'linf' or 'l2'");
    }
  }
  r.optional("hac_clusters", s.hac_clusters);
  r.finish();
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw InvalidConfig("config: name must not be empty");
  if (m_init == 0) throw InvalidConfig("config: m_init must be positive");
  if (b == 0) throw InvalidConfig("config: b must be positive");
  if (trials < 1) throw InvalidConfig("config: trials must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw InvalidConfig("config: hidden widths must be positive");
  }
  strategy.validate();
  if (strategy.kind == StrategyKind::lpl && !learner.loss_head) {
    throw InvalidConfig("config: strategy 'lpl' requires learner.loss_head = true");
  }
  learner_for(1, 2).validate();
}

LearnerConfig ExperimentConfig::learner_for(int input_dim, int classes) const {
  LearnerConfig out = learner;
  out.layer_sizes.clear();
  out.layer_sizes.push_back(input_dim);
  out.layer_sizes.insert(out.layer_sizes.end(), hidden.begin(), hidden.end());
  out.layer_sizes.push_back(classes);
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  ObjectReader r(doc, "");
  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(r.require("dataset"), "/dataset");
  cfg.strategy = parse_strategy(r.require("strategy"), "/strategy");
  cfg.m_init = r.get<std::size_t>("m_init");
  cfg.b = r.get<std::size_t>("b");
  cfg.budget = r.get<std::size_t>("Q");
  if (r.has("learner")) parse_learner(r.require("learner"), "/learner", cfg);
  r.optional("label", cfg.label);
  r.optional("name", cfg.name);
  r.optional("trials", cfg.trials);
  r.optional("base_seed", cfg.base_seed);
  r.optional("output_dir", cfg.output_dir);
  r.optional("include_round0", cfg.include_round0);
  r.finish();
  if (cfg.label.empty()) cfg.label = std::string(to_string(cfg.strategy.kind));
  if (cfg.name.empty()) cfg.name = cfg.label + "_" + cfg.dataset.display_name();
  cfg.validate();
  return cfg;
}

std::vector<ExperimentConfig> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::vector<ExperimentConfig> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      try {
        out.push_back(parse_config(doc[i]));
      } catch (const Error& e) {
        throw ParseError("experiment " + std::to_string(i) + ": " + e.what());
      }
    }
  } else {
    out.push_back(parse_config(doc));
  }
  return out;
}

json emit_config(const ExperimentConfig& cfg) {
  const DatasetSource& d = cfg.dataset;
  json dataset = {
      {"kind", d.kind},
      {"name", d.name},
      {"n_per_class", d.n_per_class},
      {"means", d.means},
      {"std", d.std_dev},
      {"n", d.n},
      {"noise", d.noise},
      {"radii", d.radii},
      {"images", d.images},
      {"labels", d.labels},
      {"test_images", d.test_images},
      {"test_labels", d.test_labels},
      {"path", d.path},
      {"test_path", d.test_path},
      {"label_column", d.label_column},
      {"group_column", d.group_column},
      {"test_fraction", d.test_fraction},
      {"subset", d.subset},
      {"imbalance", d.imbalance},
      {"seed", d.seed ? json(*d.seed) : json(nullptr)},
  };
  const LearnerConfig& l = cfg.learner;
  json learner = {
      {"hidden", cfg.hidden},
      {"dropout", l.dropout_rate},
      {"epochs", l.epochs},
      {"learning_rate", l.learning_rate},
      {"optimizer", l.optimizer == Optimizer::adam ? "adam" : "sgd"},
      {"batch_size", l.batch_size_train},
      {"standardize", l.standardize},
      {"momentum", l.momentum},
      {"weight_decay", l.weight_decay},
      {"loss_head", l.loss_head},
      {"head_hidden", l.head_hidden},
      {"ranking_margin", l.ranking_margin},
      {"head_learning_rate", l.head_learning_rate},
      {"head_loss_weight", l.head_loss_weight},
      {"head_extra_epochs", l.head_extra_epochs},
  };
  const StrategyConfig& s = cfg.strategy;
  json strategy = {
      {"kind", std::string(to_string(s.kind))},
      {"mc_passes", s.mc_passes},
      {"ceal_threshold", s.ceal_threshold},
      {"prefilter", s.prefilter},
      {"beta", s.beta},
      {"pca_dim", s.pca_dim},
      {"bim_step", s.bim.step},
      {"bim_max_steps", s.bim.max_steps},
      {"bim_norm", s.bim.norm == BimNorm::linf ? "linf" : "l2"},
      {"hac_clusters", s.hac_clusters},
  };
  return {
      {"name", cfg.name},
      {"label", cfg.label},
      {"dataset", dataset},
      {"learner", learner},
      {"strategy", strategy},
      {"m_init", cfg.m_init},
      {"b", cfg.b},
      {"Q", cfg.budget},
      {"trials", cfg.trials},
      {"base_seed", cfg.base_seed},
      {"output_dir", cfg.output_dir},
      {"include_round0", cfg.include_round0},
  };
}

}  // namespace al
