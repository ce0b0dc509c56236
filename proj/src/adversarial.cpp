#include "al/adversarial.hpp"

#include <cmath>

#include "al/errors.hpp"

namespace al {

void BimConfig::validate() const {
  if (!(step > 0.0)) throw InvalidConfig("bim: step must be positive");
  if (max_steps < 1) throw InvalidConfig("bim: max_steps must be >= 1");
}

BimResult bim_distance(const Snapshot& snap, const Vector& x, const BimConfig& config) {
  config.validate();
  if (!x.allFinite()) throw InvalidInput("bim_distance: non-finite input");
  const Matrix origin = x.transpose();
  const int original = predict(snap, origin).front();
  Vector current = x;
  BimResult result;
  for (int step = 1; step <= config.max_steps; ++step) {
    const Vector grad = input_gradient(snap, current, original);
    if (!grad.allFinite()) throw NumericalError("bim_distance: non-finite gradient");
    if (config.norm == BimNorm::linf) {
      current += config.step * grad.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
    } else {
      const double norm = grad.norm();
      if (norm > 0.0) current += (config.step / norm) * grad;
    }
    result.steps = step;
    const Matrix row = current.transpose();
    if (predict(snap, row).front() != original) {
      result.flipped = true;
      result.r_norm = (current - x).norm();
      return result;
    }
  }
  return result;
}

}  // namespace al
