#include "tsrl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tsrl {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("score/label count mismatch");
  }
  if (scores.empty()) throw std::invalid_argument("empty metric input");
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

std::pair<int, int> class_counts(std::span<const int> labels) {
  int pos = 0;
  for (int y : labels) pos += y;
  return {pos, static_cast<int>(labels.size()) - pos};
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("AUC undefined: only one class present");
  }
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Average ranks over tied groups keep the result exactly equal to the
  // pairwise count with half-credit ties (rank sums stay multiples of 1/2,
  // which doubles represent exactly at this scale).
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (int k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double rank_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (labels[k] == 1) rank_sum += rank[k];
  }
  const double u = rank_sum - static_cast<double>(pos) * (pos + 1) / 2.0;
  return u / (static_cast<double>(pos) * neg);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  int correct = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const int pred = scores[k] > threshold ? 1 : 0;
    if (pred == labels[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double eer(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("EER undefined: only one class present");
  }
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] > scores[b]; });

  // Operating points: predict positive for every score >= threshold, with
  // thresholds walking down the distinct score values. Tied scores move as
  // one group. fnr - fpr falls monotonically from +1 to -1; find where it
  // crosses zero and interpolate linearly between the bracketing points.
  double prev_fpr = 0.0, prev_fnr = 1.0;
  double prev_d = 1.0;
  int tp = 0, fp = 0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (int k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    const double fpr = static_cast<double>(fp) / neg;
    const double fnr = static_cast<double>(pos - tp) / pos;
    const double d = fnr - fpr;
    if (d <= 0.0) {
      if (d == 0.0) return fpr;
      const double t = prev_d / (prev_d - d);
      return prev_fpr + t * (fpr - prev_fpr);
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
    prev_d = d;
    i = j + 1;
  }
  return prev_fnr;  // unreachable when both classes are present
}

}  // namespace tsrl
