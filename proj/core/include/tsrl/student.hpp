#pragma once

#include <vector>

#include "tsrl/net.hpp"

namespace tsrl {

/// Batch output of a two-class classifier head. `hidden` carries the
/// penultimate-layer activations, which double as the per-sample feature
/// vector handed to the tutor. `confidence` (probability assigned to the
/// given label) and `correct` are only filled by the label-aware overload.
struct StudentOutput {
  Matrix logits;         // n x 2
  Matrix probabilities;  // n x 2, softmax rows
  Matrix hidden;         // n x H
  std::vector<int> predicted;
  std::vector<double> confidence;
  std::vector<bool> correct;

  int size() const { return logits.rows(); }
};

StudentOutput student_forward(const DenseNet& net, const Matrix& inputs);
StudentOutput student_forward(const DenseNet& net, const Matrix& inputs,
                              const std::vector<int>& labels);

struct WeightedLoss {
  double total = 0.0;                  // mean over the batch of w_i * ce_i
  std::vector<double> per_sample;      // w_i * ce_i
  std::vector<double> unweighted;      // ce_i, kept for the loss history
};

/// Per-sample cross entropy scaled by weights in [0,1]; weights outside the
/// range, or any length mismatch, throw std::invalid_argument.
WeightedLoss weighted_ce_loss(const StudentOutput& output, const std::vector<int>& labels,
                              const std::vector<double>& weights);

struct StepReport {
  double loss_before = 0.0;  // weighted objective before the update
  double grad_norm = 0.0;
  bool applied = false;      // false when the gradient was exactly zero
};

/// One weighted optimizer step. The gradient is exact backpropagation of
/// the weighted cross-entropy objective; a non-finite gradient aborts with
/// std::runtime_error. An exactly-zero gradient (e.g. all weights zero)
/// leaves both parameters and optimizer state untouched.
StepReport train_step(DenseNet& net, Optimizer& optimizer, const Matrix& batch,
                      const std::vector<int>& labels, const std::vector<double>& weights);

struct EvalSample {
  bool correct = false;
  double confidence = 0.0;  // probability of the given label
  double ce_loss = 0.0;     // unweighted cross entropy
};

struct EvalSnapshot {
  std::vector<EvalSample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  double mean_loss() const;
  double accuracy() const;
};

/// Pure read of the network on a dataset; consumes no randomness, so
/// snapshots taken around an update never perturb the training stream.
EvalSnapshot evaluate(const DenseNet& net, const Matrix& inputs, const std::vector<int>& labels);

}  // namespace tsrl
