#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tsrl/net.hpp"
#include "tsrl/state.hpp"

namespace tsrl {

inline constexpr double kLogStdMin = -6.907755278982137;  // ln(1e-3)
inline constexpr double kLogStdMax = 2.302585092994046;   // ln(10)

/// Stochastic weighting policy: the actor maps a tutor state to the mean of
/// a Gaussian over the weight logit (shared learnable log-std), the critic
/// maps the same state to a scalar value estimate. The two networks are
/// independent; nothing is shared.
struct TutorPolicy {
  DenseNet actor;
  double log_std = 0.0;
  DenseNet critic;

  /// Both networks are state_dim -> hidden (tanh) -> 1.
  static TutorPolicy make(int state_dim, const std::vector<int>& hidden_dims,
                          double log_std_init, Rng& rng);

  int state_dim() const { return actor.input_dim(); }

  /// Actor parameters as one flat vector: network parameters then log_std.
  std::vector<double> actor_parameters() const;
  void set_actor_parameters(std::span<const double> params);
  std::size_t actor_parameter_count() const { return actor.parameter_count() + 1; }
};

/// One weighting decision: the sampled logit, its sigmoid (the weight
/// actually applied to the sample's loss), the Gaussian log-density of the
/// logit, and the critic's value estimate.
struct ActionSample {
  double weight = 0.0;
  double logit = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
};

struct Experience {
  TutorState state;
  ActionSample action;
  double reward = 0.0;
  bool done = true;  // every decision is a one-step episode
};

using RolloutBuffer = std::vector<Experience>;

struct PPOConfig {
  double clip_eps = 0.2;
  double actor_lr = 1e-4;
  double critic_lr = 3e-4;
  int ppo_epochs = 4;
  int minibatch_size = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  bool advantage_norm = true;
  OptimizerKind optimizer = OptimizerKind::kAdam;

  void validate() const;
};

/// Heuristic self-paced expert: a Gaussian bump over the normalized EMA
/// loss, peaked at moderate difficulty, floored at min_weight.
struct ExpertConfig {
  double loss_peak = 0.5;
  double loss_width = 0.15;
  double min_weight = 0.05;

  void validate() const;
};

struct BCConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  int minibatch_size = 64;
  double holdout_fraction = 0.2;

  void validate() const;
};

double sigmoid(double z);

/// Log-density of z under Normal(mean, exp(log_std)^2). Taken in logit
/// space; the sigmoid squash is deterministic post-processing, so its
/// Jacobian cancels from every probability ratio.
double gaussian_log_prob(double z, double mean, double log_std);

double policy_mean_logit(const TutorPolicy& policy, const TutorState& state);
double policy_value(const TutorPolicy& policy, const TutorState& state);

/// Draws a logit from the policy Gaussian; weight = sigmoid(logit).
ActionSample sample_action(const TutorPolicy& policy, const TutorState& state, Rng& rng);

/// Deterministic weight, sigmoid of the mean logit. Used by the frozen
/// (cloning-only) mode and for evaluation.
double mean_action(const TutorPolicy& policy, const TutorState& state);

double expert_weight(const TutorState& state, const ExpertConfig& config);
std::vector<double> expert_weights(std::span<const TutorState> states, const ExpertConfig& config);

struct BCReport {
  double final_mse = 0.0;  // held-out MSE (training MSE when no holdout)
  long steps = 0;
};

/// Regresses mean_action onto the target weights with MSE; only the actor
/// network moves (log_std and critic untouched).
BCReport bc_pretrain(TutorPolicy& policy, const std::vector<TutorState>& states,
                     const std::vector<double>& targets, const BCConfig& config, Rng& rng);

struct AdvantageResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// One-step episodes: return = reward, advantage = reward - stored value.
/// With advantage_norm the advantages are standardized over the whole
/// buffer (1e-8 std guard).
AdvantageResult compute_advantages(const RolloutBuffer& buffer, bool advantage_norm);

/// Clipped-surrogate objective over a batch of experiences, with its ascent
/// gradient w.r.t. the actor parameters (+ log_std, last entry). Exposed so
/// the analytic gradient can be checked against finite differences of the
/// objective.
struct SurrogateEval {
  double objective = 0.0;      // mean clipped term + entropy_coef * entropy
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;  // share of ratios strictly outside [1-eps, 1+eps]
  std::vector<double> per_sample_objective;
  std::vector<double> gradient;
};

SurrogateEval eval_surrogate(const TutorPolicy& policy, std::span<const Experience> batch,
                             std::span<const double> advantages, const PPOConfig& config);

struct PPOFirstBatch {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> objectives;
  std::vector<double> advantages;
};

struct PPOReport {
  double mean_ratio = 0.0;     // averaged over all minibatch passes
  double clip_fraction = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  int minibatches = 0;
  PPOFirstBatch first;         // probe taken before the first update
};

/// PPO over the stored decisions: for ppo_epochs passes over shuffled
/// minibatches, ascend the clipped surrogate (ratio of fresh to stored
/// log-density of the stored logit) and regress the critic to the returns.
/// log_std is re-clamped after every actor step. Non-finite losses abort
/// with std::runtime_error.
PPOReport ppo_update(TutorPolicy& policy, const RolloutBuffer& buffer, const PPOConfig& config,
                     Optimizer& actor_opt, Optimizer& critic_opt, Rng& rng);

}  // namespace tsrl
