#pragma once

#include <span>

namespace tsrl {

/// Area under the ROC curve, Mann-Whitney formulation: the probability that
/// a random positive outscores a random negative, ties counted as 1/2.
/// Throws std::invalid_argument unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of samples whose thresholded score (score > threshold -> 1)
/// matches the label.
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

/// Equal error rate: the common rate where the false-positive and
/// false-negative rates cross along the ROC operating points, linearly
/// interpolated between adjacent thresholds when no exact crossing exists.
/// Throws std::invalid_argument unless both classes are present.
double eer(std::span<const double> scores, std::span<const int> labels);

}  // namespace tsrl
