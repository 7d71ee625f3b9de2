#pragma once

namespace tsrl {

struct RewardConfig {
  /// Scaling coefficient for the no-flip cases; kept in (0,1] so a
  /// correctness flip always dominates any confidence drift.
  double c_rew = 0.5;

  void validate() const;
};

/// Correctness and true-class confidence of one sample, measured immediately
/// before and immediately after a single weighted optimizer step.
struct SampleTransition {
  bool correct_init = false;
  double conf_init = 0.0;
  bool correct_upd = false;
  double conf_upd = 0.0;
};

/// State-change reward, four cases:
///   error->correct  +1
///   correct->error  -1
///   correct->correct  +c_rew * (conf_upd - conf_init)
///   error->error      -c_rew * (conf_upd - conf_init)
/// Confidences outside [0,1] throw std::invalid_argument.
double compute_reward(const SampleTransition& t, const RewardConfig& config);

}  // namespace tsrl
