#include "al/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "al/errors.hpp"

namespace al {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 200.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_budget_svg(std::span<const CurveSeries> series, bool include_round0) {
  if (series.empty()) throw InvalidInput("plot: no curves");
  std::vector<std::size_t> grid;
  for (const CurveSeries& s : series) {
    if (s.trials.empty()) throw InvalidInput("plot: series '" + s.label + "' has no trials");
    for (const BudgetCurve& c : s.trials) {
      c.validate();
      std::vector<std::size_t> xs;
      for (const CurvePoint& p : c.points) xs.push_back(p.labeled);
      if (grid.empty()) grid = xs;
      if (xs != grid) throw InvalidInput("plot: curves do not share a labeled-count grid");
    }
  }

  const double x0 = static_cast<double>(grid.front());
  const double x1 = grid.size() > 1 ? static_cast<double>(grid.back()) : x0 + 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * plot_w; };
  auto py = [&](double acc) { return kTop + (1.0 - acc) * plot_h; };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
         fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<g stroke=\"black\">\n";
  out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", py(0)) + "\" x2=\"" + fmt("%.2f", kLeft + plot_w) +
         "\" y2=\"" + fmt("%.2f", py(0)) + "\"/>\n";
  out += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", py(0)) + "\" x2=\"" + fmt("%.2f", kLeft) +
         "\" y2=\"" + fmt("%.2f", py(1)) + "\"/>\n</g>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double acc = tick / 5.0;
    out += "<text x=\"" + fmt("%.2f", kLeft - 6) + "\" y=\"" + fmt("%.2f", py(acc) + 4) +
           "\" text-anchor=\"end\">" + fmt("%.1f", acc) + "</text>\n";
  }
  out += "<text x=\"" + fmt("%.2f", kLeft) + "\" y=\"" + fmt("%.2f", py(0) + 18) + "\" text-anchor=\"middle\">" +
         std::to_string(grid.front()) + "</text>\n";
  out += "<text x=\"" + fmt("%.2f", kLeft + plot_w) + "\" y=\"" + fmt("%.2f", py(0) + 18) +
         "\" text-anchor=\"middle\">" + std::to_string(grid.back()) + "</text>\n";
  out += "<text x=\"" + fmt("%.2f", kLeft + plot_w / 2) + "\" y=\"" + fmt("%.2f", kHeight - 10) +
         "\" text-anchor=\"middle\">labeled samples</text>\n";
  out += "<text transform=\"translate(16," + fmt("%.2f", kTop + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">test accuracy</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const CurveSeries& cs = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double mean = 0.0;
      for (const BudgetCurve& c : cs.trials) mean += c.points[i].accuracy;
      mean /= static_cast<double>(cs.trials.size());
      if (!points.empty()) points += ' ';
      points += fmt("%.2f", px(static_cast<double>(grid[i]))) + "," + fmt("%.2f", py(mean));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points +
           "\"/>\n";

    const TrialSummary summary = summarize_trials(cs.trials, include_round0);
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    const double lx = kWidth - kRight + 12;
    out += "<line x1=\"" + fmt("%.2f", lx) + "\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"" + fmt("%.2f", lx + 18) +
           "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt("%.2f", lx + 24) + "\" y=\"" + fmt("%.2f", ly + 4) + "\">" + escape(cs.label) + " (" +
           fmt("%.4f", summary.mean_aubc) + " ± " + fmt("%.4f", summary.std_aubc) + ")</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_budget_svg(std::span<const CurveSeries> series, const std::filesystem::path& path, bool include_round0) {
  const std::string svg = render_budget_svg(series, include_round0);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << svg;
}

}  // namespace al
