#include "al/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "al/errors.hpp"

namespace al {

void BudgetCurve::validate() const {
  if (points.empty()) throw InvalidInput("budget curve: no points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].labeled <= points[i - 1].labeled) {
      throw InvalidInput("budget curve: labeled counts must be strictly increasing");
    }
  }
}

double aubc(const BudgetCurve& curve, bool include_round0) {
  curve.validate();
  std::span<const CurvePoint> pts(curve.points);
  if (!include_round0 && pts.size() >= 3) pts = pts.subspan(1);
  if (pts.size() == 1) return pts.front().accuracy;
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double width = static_cast<double>(pts[i].labeled - pts[i - 1].labeled);
    area += 0.5 * width * (pts[i].accuracy + pts[i - 1].accuracy);
  }
  return area / static_cast<double>(pts.back().labeled - pts.front().labeled);
}

double final_accuracy(const BudgetCurve& curve) {
  curve.validate();
  return curve.points.back().accuracy;
}

TrialSummary summarize_trials(std::span<const BudgetCurve> curves, bool include_round0) {
  if (curves.empty()) throw InvalidInput("summarize_trials: no curves");
  for (const auto& c : curves) {
    c.validate();
    if (c.points.size() != curves.front().points.size()) throw InvalidInput("summarize_trials: grids differ");
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (c.points[i].labeled != curves.front().points[i].labeled) {
        throw InvalidInput("summarize_trials: grids differ");
      }
    }
  }
  TrialSummary s;
  std::vector<double> values;
  for (const auto& c : curves) {
    values.push_back(aubc(c, include_round0));
    s.mean_final_accuracy += final_accuracy(c);
  }
  const double n = static_cast<double>(curves.size());
  for (double v : values) s.mean_aubc += v;
  s.mean_aubc /= n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean_aubc) * (v - s.mean_aubc);
  s.std_aubc = std::sqrt(var / n);
  s.mean_final_accuracy /= n;
  return s;
}

GroupedAccuracy grouped_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                 std::span<const int> groups, const std::optional<std::set<int>>& subset,
                                 const std::optional<std::set<int>>& declared_groups) {
  if (predictions.size() != labels.size() || labels.size() != groups.size()) {
    throw InvalidInput("grouped_accuracy: length mismatch");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [correct, total] = counts[groups[i]];
    correct += predictions[i] == labels[i] ? 1 : 0;
    ++total;
  }
  if (declared_groups) {
    for (int g : *declared_groups) {
      if (!counts.contains(g)) std::cerr << "warning: group " << g << " has no samples; excluded from worst\n";
    }
  }
  GroupedAccuracy out;
  out.worst = std::numeric_limits<double>::infinity();
  for (const auto& [g, c] : counts) {
    const double acc = static_cast<double>(c.first) / static_cast<double>(c.second);
    out.per_group[g] = acc;
    out.worst = std::min(out.worst, acc);
  }
  if (counts.empty()) out.worst = 0.0;
  if (subset) {
    std::size_t correct = 0, total = 0;
    for (int g : *subset) {
      auto it = counts.find(g);
      if (it == counts.end()) {
        std::cerr << "warning: subset group " << g << " has no samples\n";
        continue;
      }
      correct += it->second.first;
      total += it->second.second;
    }
    if (total > 0) out.subset = static_cast<double>(correct) / static_cast<double>(total);
  }
  return out;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * h / a;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw InvalidInput("student_t: df must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("paired_t_test: need equal lengths >= 2");
  const auto n = static_cast<double>(a.size());
  std::vector<double> diff(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[i] = a[i] - b[i];
    mean += diff[i];
  }
  mean /= n;
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  if (sd == 0.0) {
    if (mean == 0.0) return {0.0, 1.0};
    return {mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0};
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_two_sided(r.t, n - 1.0);
  return r;
}

WinTieLossTable rank_league(std::vector<LeagueEntry> entries) {
  for (auto& e : entries) e.score = 2 * e.win + e.tie;
  std::stable_sort(entries.begin(), entries.end(), [](const LeagueEntry& x, const LeagueEntry& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.method < y.method;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
  return {std::move(entries)};
}

WinTieLossTable win_tie_loss(const AubcTable& table, double margin) {
  if (!(margin >= 0.0)) throw InvalidInput("win_tie_loss: margin must be >= 0");
  std::map<std::string, LeagueEntry> by_method;
  for (const auto& [dataset, methods] : table) {
    for (const auto& [name, value] : methods) by_method[name].method = name;
  }
  for (const auto& [dataset, methods] : table) {
    if (methods.size() != by_method.size()) {
      throw InvalidInput("win_tie_loss: dataset '" + dataset + "' is missing methods");
    }
    for (const auto& [a, va] : methods) {
      for (const auto& [b, vb] : methods) {
        if (a == b) continue;
        LeagueEntry& e = by_method[a];
        if (va > vb + margin) {
          ++e.win;
        } else if (va < vb - margin) {
          ++e.loss;
        } else {
          ++e.tie;
        }
      }
    }
  }
  std::vector<LeagueEntry> entries;
  for (auto& [name, e] : by_method) entries.push_back(std::move(e));
  return rank_league(std::move(entries));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

AubcTable read_aubc_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_aubc_table: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("read_aubc_table: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "dataset,method,aubc") throw SchemaError("read_aubc_table: expected header dataset,method,aubc");
  AubcTable table;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw ParseError("read_aubc_table: row " + std::to_string(row) + " needs 3 cells");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cells[2], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cells[2].size() || cells[2].empty()) {
      throw ParseError("read_aubc_table: row " + std::to_string(row) + " has non-numeric aubc '" + cells[2] + "'");
    }
    table[cells[0]][cells[1]] = v;
  }
  return table;
}

std::string format_aubc_table(const AubcTable& table) {
  std::string out = "dataset,method,aubc\n";
  for (const auto& [dataset, methods] : table) {
    for (const auto& [method, value] : methods) out += dataset + "," + method + "," + format_double(value) + "\n";
  }
  return out;
}

std::string format_league_csv(const WinTieLossTable& table) {
  std::string out = "method,win,tie,loss,score,rank\n";
  for (const auto& e : table.entries) {
    out += e.method + "," + std::to_string(e.win) + "," + std::to_string(e.tie) + "," + std::to_string(e.loss) + "," +
           std::to_string(e.score) + "," + std::to_string(e.rank) + "\n";
  }
  return out;
}

}  // namespace al
