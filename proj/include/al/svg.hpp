#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "al/metrics.hpp"

namespace al {

/// One method's trials, drawn as the mean curve.
struct CurveSeries {
  std::string label;
  std::vector<BudgetCurve> trials;
};

/// Accuracy-budget line chart, one polyline per series, legend entries of the
/// form "label (mean ± std)" of AUBC. All curves must share one labeled-count grid.
std::string render_budget_svg(std::span<const CurveSeries> series, bool include_round0 = true);

void emit_budget_svg(std::span<const CurveSeries> series, const std::filesystem::path& path,
                     bool include_round0 = true);

}  // namespace al
