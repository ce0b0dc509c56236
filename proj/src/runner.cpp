#include "al/runner.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "al/errors.hpp"

namespace al {
namespace {

using nlohmann::json;

// Shortest text that round-trips to the same double.
std::string format_accuracy(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

json summary_json(const ConfigOutcome& outcome) {
  const ExperimentConfig& cfg = outcome.config;
  json trials = json::array();
  for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
    const TrialOutcome& t = outcome.trials[i];
    json entry{{"trial", i}, {"seed", t.seed}};
    if (t.result) {
      entry["aubc"] = aubc(t.result->curve, cfg.include_round0);
      entry["final_accuracy"] = final_accuracy(t.result->curve);
      std::size_t pseudo = 0;
      std::size_t pseudo_errors = 0;
      for (const RoundRecord& r : t.result->rounds) {
        pseudo += r.pseudo_labeled;
        pseudo_errors += r.pseudo_errors;
      }
      if (pseudo > 0) {
        entry["pseudo_labeled"] = pseudo;
        entry["pseudo_errors"] = pseudo_errors;
      }
    } else {
      entry["error"] = t.error;
    }
    trials.push_back(std::move(entry));
  }
  json doc{{"name", cfg.name},
           {"label", cfg.label},
           {"dataset", cfg.dataset.display_name()},
           {"strategy", std::string(to_string(cfg.strategy.kind))},
           {"include_round0", cfg.include_round0},
           {"trials", std::move(trials)}};
  if (outcome.summary) {
    doc["mean_aubc"] = outcome.summary->mean_aubc;
    doc["std_aubc"] = outcome.summary->std_aubc;
    doc["mean_final_accuracy"] = outcome.summary->mean_final_accuracy;
  }
  return doc;
}

void write_outputs(SuiteResult& suite, bool write_timing) {
  for (const ConfigOutcome& outcome : suite.configs) {
    std::filesystem::create_directories(outcome.directory);
    write_file(outcome.directory / "config.resolved.json", emit_config(outcome.config).dump(2) + "\n");
    json timing = json::array();
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
      const TrialOutcome& t = outcome.trials[i];
      if (t.result) write_file(outcome.directory / ("trial_" + std::to_string(i) + ".csv"), format_curve_csv(t.result->curve));
      timing.push_back({{"trial", i}, {"seconds", t.seconds}});
    }
    write_file(outcome.directory / "summary.json", summary_json(outcome).dump(2) + "\n");
    if (write_timing) write_file(outcome.directory / "timing.json", timing.dump(2) + "\n");
  }
  std::filesystem::create_directories(suite.table_path.parent_path());
  write_file(suite.table_path, format_aubc_table(suite.table));
}

}  // namespace

std::size_t default_thread_count() {
  if (const char* env = std::getenv("AL_ENGINE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    std::cerr << "warning: ignoring AL_ENGINE_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const SuiteOptions& options) {
  if (configs.empty()) throw InvalidConfig("run_suite: empty suite");

  SuiteResult suite;
  const std::filesystem::path root = options.output_dir.value_or(configs.front().output_dir);
  suite.table_path = root / "aubc_table.csv";
  std::set<std::filesystem::path> directories;
  std::set<std::pair<std::string, std::string>> table_keys;
  for (const ExperimentConfig& original : configs) {
    ConfigOutcome outcome;
    outcome.config = original;
    if (options.seed) outcome.config.base_seed = *options.seed;
    if (options.output_dir) outcome.config.output_dir = options.output_dir->string();
    outcome.config.validate();
    outcome.directory = std::filesystem::path(outcome.config.output_dir) / outcome.config.name;
    if (!directories.insert(outcome.directory).second) {
      throw InvalidConfig("run_suite: two configs write to " + outcome.directory.string());
    }
    if (!table_keys.emplace(outcome.config.dataset.display_name(), outcome.config.label).second) {
      throw InvalidConfig("run_suite: duplicate (dataset, label) pair " + outcome.config.dataset.display_name() +
                          ", " + outcome.config.label);
    }
    for (int i = 0; i < outcome.config.trials; ++i) {
      TrialOutcome trial;
      trial.seed = outcome.config.base_seed + static_cast<Seed>(i);
      outcome.trials.push_back(std::move(trial));
    }
    suite.configs.push_back(std::move(outcome));
  }

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < suite.configs.size(); ++c) {
    for (std::size_t t = 0; t < suite.configs[c].trials.size(); ++t) jobs.emplace_back(c, t);
  }

  // Each job writes only its own slot, so results do not depend on scheduling.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto [c, t] = jobs[j];
      const ExperimentConfig& cfg = suite.configs[c].config;
      TrialOutcome& slot = suite.configs[c].trials[t];
      const auto start = std::chrono::steady_clock::now();
      try {
        slot.result = run_trial(cfg, make_dataset(cfg.dataset, slot.seed), slot.seed);
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
      slot.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const std::size_t threads = std::min(options.threads > 0 ? options.threads : default_thread_count(), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (ConfigOutcome& outcome : suite.configs) {
    std::vector<BudgetCurve> curves;
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
      const TrialOutcome& t = outcome.trials[i];
      if (t.result) {
        curves.push_back(t.result->curve);
      } else {
        ++suite.failed_trials;
        std::cerr << "trial " << i << " of " << outcome.config.name << " failed: " << t.error << "\n";
      }
    }
    if (!curves.empty()) {
      outcome.summary = summarize_trials(curves, outcome.config.include_round0);
      suite.table[outcome.config.dataset.display_name()][outcome.config.label] = outcome.summary->mean_aubc;
    }
  }
  write_outputs(suite, options.write_timing);
  return suite;
}

std::string format_curve_csv(const BudgetCurve& curve) {
  std::string out = "round,labeled,accuracy\n";
  for (std::size_t r = 0; r < curve.points.size(); ++r) {
    out += std::to_string(r) + "," + std::to_string(curve.points[r].labeled) + "," +
           format_accuracy(curve.points[r].accuracy) + "\n";
  }
  return out;
}

BudgetCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "round,labeled,accuracy") throw SchemaError(path.string() + ": expected header round,labeled,accuracy");
  BudgetCurve curve;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::size_t round = 0;
    std::size_t labeled = 0;
    double acc = 0.0;
    char c1 = 0;
    char c2 = 0;
    if (!(cells >> round >> c1 >> labeled >> c2 >> acc) || c1 != ',' || c2 != ',' || !(cells >> std::ws).eof()) {
      throw ParseError(path.string() + ": malformed row " + std::to_string(row));
    }
    curve.points.push_back({labeled, acc});
  }
  curve.validate();
  return curve;
}

}  // namespace al
