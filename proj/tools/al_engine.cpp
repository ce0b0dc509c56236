// Command-line front end: run suites, rank methods, score probabilities, plot curves.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "al/errors.hpp"
#include "al/metrics.hpp"
#include "al/runner.hpp"
#include "al/scoring.hpp"
#include "al/svg.hpp"

namespace {

using al::Matrix;

Matrix read_prob_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw al::Error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream cells(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) {
      if (row == 1) continue;  // header
      throw al::ParseError(path + ": non-numeric cell on line " + std::to_string(row));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw al::ShapeError(path + ": ragged row on line " + std::to_string(row));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw al::InvalidInput(path + ": no probability rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::vector<double> score_command(const std::string& kind_name, const Matrix& probs, int passes) {
  using al::PointwiseKind;
  using al::StrategyKind;
  const StrategyKind kind = al::parse_strategy_kind(kind_name);
  const std::map<StrategyKind, PointwiseKind> pointwise{{StrategyKind::entropy, PointwiseKind::entropy},
                                                        {StrategyKind::margin, PointwiseKind::margin},
                                                        {StrategyKind::least_conf, PointwiseKind::least_conf},
                                                        {StrategyKind::var_ratio, PointwiseKind::var_ratio}};
  if (auto it = pointwise.find(kind); it != pointwise.end()) return al::score_rows(it->second, probs);
  if (kind != StrategyKind::bald && kind != StrategyKind::mean_std) {
    throw al::InvalidConfig("score: strategy '" + kind_name + "' is not a probability scorer");
  }
  // Pass-major rows: pass t, sample i is row t * n + i.
  const auto rows = static_cast<std::size_t>(probs.rows());
  const auto t = static_cast<std::size_t>(passes);
  if (passes < 1 || rows % t != 0) throw al::ShapeError("score: row count is not a multiple of --passes");
  al::McProbTensor mc(t, rows / t, static_cast<std::size_t>(probs.cols()));
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t i = 0; i < mc.samples; ++i) {
      for (std::size_t c = 0; c < mc.classes; ++c) {
        mc.at(p, i, c) = probs(static_cast<Eigen::Index>(p * mc.samples + i), static_cast<Eigen::Index>(c));
      }
    }
  }
  return kind == StrategyKind::bald ? al::score_bald(mc) : al::score_meanstd(mc);
}

std::string series_label(const std::filesystem::path& dir) {
  const auto resolved = dir / "config.resolved.json";
  if (std::filesystem::exists(resolved)) {
    std::ifstream in(resolved);
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_object() && doc.contains("label") && doc["label"].is_string()) return doc["label"].get<std::string>();
  }
  return dir.filename().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning engine"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run every experiment in a config file");
  std::string config_path;
  std::optional<al::Seed> seed;
  std::string output;
  std::size_t threads = 0;
  bool timing = false;
  run->add_option("config", config_path, "Experiment JSON (object or array)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override base_seed");
  run->add_option("--output", output, "Output directory for every experiment and the suite table");
  run->add_option("--threads", threads, "Worker threads (default: AL_ENGINE_THREADS or hardware count)");
  run->add_flag("--timing", timing, "Write per-trial wall time to timing.json");

  auto* rank = app.add_subcommand("rank", "Win-tie-loss league from an AUBC table");
  std::string table_path;
  double margin = 0.005;
  rank->add_option("table", table_path, "CSV with dataset,method,aubc")->required()->check(CLI::ExistingFile);
  rank->add_option("--margin", margin, "Tie margin on AUBC")->check(CLI::NonNegativeNumber);

  auto* score = app.add_subcommand("score", "Score rows of a probability CSV");
  std::string strategy;
  std::string probs_path;
  int passes = 1;
  score->add_option("--strategy", strategy, "entropy, margin, least_conf, var_ratio, bald or mean_std")->required();
  score->add_option("--probs", probs_path, "Probability CSV, one row per sample")->required()->check(CLI::ExistingFile);
  score->add_option("--passes", passes, "MC passes for bald/mean_std (pass-major rows)")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plot", "Accuracy-budget SVG from trial curve CSVs");
  std::vector<std::string> curve_paths;
  std::string svg_path = "curves.svg";
  plot->add_option("curves", curve_paths, "trial_*.csv files; grouped by parent directory")->required()->check(
      CLI::ExistingFile);
  plot->add_option("--out", svg_path, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) {
      al::SuiteOptions options;
      options.seed = seed;
      if (!output.empty()) options.output_dir = output;
      options.threads = threads;
      options.write_timing = timing;
      const al::SuiteResult suite = al::run_suite(al::parse_config_file(config_path), options);
      for (const al::ConfigOutcome& c : suite.configs) {
        double seconds = 0.0;
        for (const auto& t : c.trials) seconds += t.seconds;
        if (c.summary) {
          std::printf("%s\taubc %.4f ± %.4f\tfinal %.4f\t(%.1fs)\n", c.config.name.c_str(), c.summary->mean_aubc,
                      c.summary->std_aubc, c.summary->mean_final_accuracy, seconds);
        } else {
          std::printf("%s\tall trials failed\n", c.config.name.c_str());
        }
      }
      std::printf("table: %s\n", suite.table_path.string().c_str());
      return suite.ok() ? 0 : 1;
    }
    if (*rank) {
      std::cout << al::format_league_csv(al::win_tie_loss(al::read_aubc_table(table_path), margin));
      return 0;
    }
    if (*score) {
      for (double v : score_command(strategy, read_prob_csv(probs_path), passes)) std::printf("%.12g\n", v);
      return 0;
    }
    if (*plot) {
      std::map<std::filesystem::path, al::CurveSeries> groups;
      std::vector<std::filesystem::path> order;
      for (const std::string& p : curve_paths) {
        const auto dir = std::filesystem::absolute(p).parent_path();
        auto [it, fresh] = groups.try_emplace(dir);
        if (fresh) {
          it->second.label = series_label(dir);
          order.push_back(dir);
        }
        it->second.trials.push_back(al::read_curve_csv(p));
      }
      std::vector<al::CurveSeries> series;
      for (const auto& dir : order) series.push_back(groups[dir]);
      al::emit_budget_svg(series, svg_path);
      std::printf("wrote %s\n", svg_path.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
