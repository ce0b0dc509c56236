#pragma once

#include <span>
#include <vector>

#include "al/learner.hpp"

namespace al {

/// Per-sample acquisition scores. Larger means more informative for every kind.
enum class PointwiseKind { entropy, margin, least_conf, var_ratio };

/// Shannon entropy in nats, with 0 ln 0 = 0.
double entropy(std::span<const double> p);

double score_pointwise(PointwiseKind kind, std::span<const double> p);
std::vector<double> score_rows(PointwiseKind kind, const Matrix& probs);

/// score_pointwise applied to the mean over passes.
std::vector<double> score_mc_pointwise(PointwiseKind kind, const McProbTensor& mc);

/// Entropy of the mean prediction minus mean per-pass entropy. Zero when T < 2.
std::vector<double> score_bald(const McProbTensor& mc);

/// Mean over classes of the population standard deviation across passes.
std::vector<double> score_meanstd(const McProbTensor& mc);

}  // namespace al
