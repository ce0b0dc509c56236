#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "al/types.hpp"

namespace al {

struct CurvePoint {
  std::size_t labeled = 0;
  double accuracy = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

/// Accuracy against labeled-set size, labeled counts strictly increasing.
struct BudgetCurve {
  std::vector<CurvePoint> points;

  void validate() const;
  bool operator==(const BudgetCurve&) const = default;
};

/// Trapezoidal area under accuracy vs labeled count, divided by the labeled-count
/// range. A single point returns its accuracy. With `include_round0 = false`
/// the first point is dropped when at least two remain.
double aubc(const BudgetCurve& curve, bool include_round0 = true);

double final_accuracy(const BudgetCurve& curve);

struct TrialSummary {
  double mean_aubc = 0.0;
  double std_aubc = 0.0;  // population
  double mean_final_accuracy = 0.0;
};

TrialSummary summarize_trials(std::span<const BudgetCurve> curves, bool include_round0 = true);

struct GroupedAccuracy {
  std::map<int, double> per_group;
  double worst = 0.0;
  std::optional<double> subset;
};

/// Per-group accuracy, the worst group, and pooled accuracy over `subset` ids.
/// Groups listed in `declared_groups` without samples are skipped with a warning.
GroupedAccuracy grouped_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                 std::span<const int> groups, const std::optional<std::set<int>>& subset = {},
                                 const std::optional<std::set<int>>& declared_groups = {});

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

/// Paired two-sided t-test on a - b. Zero-variance differences give p = 1 when
/// all differences are zero and p = 0 otherwise (t is then 0 or +/-infinity).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

struct LeagueEntry {
  std::string method;
  int win = 0;
  int tie = 0;
  int loss = 0;
  int score = 0;
  int rank = 0;
};

/// Entries ordered by rank (score = 2 win + tie descending, then method name).
struct WinTieLossTable {
  std::vector<LeagueEntry> entries;
};

/// dataset -> method -> AUBC
using AubcTable = std::map<std::string, std::map<std::string, double>>;

WinTieLossTable win_tie_loss(const AubcTable& table, double margin = 0.005);

/// Fills score and rank and orders the entries.
WinTieLossTable rank_league(std::vector<LeagueEntry> entries);

/// CSV with header `dataset,method,aubc`.
AubcTable read_aubc_table(const std::filesystem::path& path);
std::string format_aubc_table(const AubcTable& table);

/// CSV with header `method,win,tie,loss,score,rank`.
std::string format_league_csv(const WinTieLossTable& table);

}  // namespace al
