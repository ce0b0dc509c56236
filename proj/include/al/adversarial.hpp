#pragma once

#include <limits>

#include "al/learner.hpp"

namespace al {

/// Step geometry: sign steps (linf) or normalized-gradient steps (l2).
enum class BimNorm { linf, l2 };

struct BimConfig {
  double step = 0.05;
  int max_steps = 50;
  BimNorm norm = BimNorm::linf;

  void validate() const;
  bool operator==(const BimConfig&) const = default;
};

struct BimResult {
  /// L2 norm of the accumulated perturbation, +infinity when the label never flipped.
  double r_norm = std::numeric_limits<double>::infinity();
  bool flipped = false;
  int steps = 0;
};

/// Untargeted iterative attack against the initial prediction. Stops at the first
/// label change or after `max_steps` steps; the reported distance is always L2.
BimResult bim_distance(const Snapshot& snap, const Vector& x, const BimConfig& config);

}  // namespace al
