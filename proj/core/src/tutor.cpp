#include "tsrl/tutor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsrl {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

Matrix single_row(const TutorState& state) {
  const std::vector<double> v = state.to_vector();
  Matrix m(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), m.row(0).begin());
  return m;
}

Matrix batch_inputs(std::span<const Experience> batch) {
  const int dim = batch.empty() ? 0 : batch.front().state.dimension();
  Matrix inputs(static_cast<int>(batch.size()), dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> v = batch[i].state.to_vector();
    if (static_cast<int>(v.size()) != dim) {
      throw std::invalid_argument("inconsistent state dimensions in buffer");
    }
    std::copy(v.begin(), v.end(), inputs.row(static_cast<int>(i)).begin());
  }
  return inputs;
}

}  // namespace

void PPOConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("clip_eps must be in (0,1)");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw std::invalid_argument("PPO learning rates must be positive");
  if (ppo_epochs < 1) throw std::invalid_argument("ppo_epochs must be at least 1");
  if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be at least 1");
  if (entropy_coef < 0.0 || value_coef < 0.0) throw std::invalid_argument("PPO coefficients must be non-negative");
}

void ExpertConfig::validate() const {
  if (!(loss_width > 0.0)) throw std::invalid_argument("expert loss_width must be positive");
  if (!(min_weight >= 0.0 && min_weight < 1.0)) throw std::invalid_argument("expert min_weight must be in [0,1)");
}

void BCConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("BC learning rate must be positive");
  if (epochs < 1) throw std::invalid_argument("BC epochs must be at least 1");
  if (minibatch_size < 1) throw std::invalid_argument("BC minibatch_size must be at least 1");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("BC holdout_fraction must be in [0,1)");
  }
}

TutorPolicy TutorPolicy::make(int state_dim, const std::vector<int>& hidden_dims,
                              double log_std_init, Rng& rng) {
  TutorPolicy policy;
  policy.actor = DenseNet::make(state_dim, hidden_dims, 1, Activation::kTanh, rng);
  policy.critic = DenseNet::make(state_dim, hidden_dims, 1, Activation::kTanh, rng);
  policy.log_std = std::clamp(log_std_init, kLogStdMin, kLogStdMax);
  return policy;
}

std::vector<double> TutorPolicy::actor_parameters() const {
  std::vector<double> params = actor.parameters();
  params.push_back(log_std);
  return params;
}

void TutorPolicy::set_actor_parameters(std::span<const double> params) {
  if (params.size() != actor_parameter_count()) {
    throw std::invalid_argument("actor parameter vector length mismatch");
  }
  actor.set_parameters(params.subspan(0, params.size() - 1));
  log_std = params.back();
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double gaussian_log_prob(double z, double mean, double log_std) {
  const double u = (z - mean) * std::exp(-log_std);
  return -0.5 * u * u - log_std - kHalfLog2Pi;
}

double policy_mean_logit(const TutorPolicy& policy, const TutorState& state) {
  return policy.actor.forward(single_row(state))(0, 0);
}

double policy_value(const TutorPolicy& policy, const TutorState& state) {
  return policy.critic.forward(single_row(state))(0, 0);
}

ActionSample sample_action(const TutorPolicy& policy, const TutorState& state, Rng& rng) {
  const double mu = policy_mean_logit(policy, state);
  const double sigma = std::exp(policy.log_std);
  ActionSample action;
  action.logit = mu + sigma * rng.normal();
  action.weight = sigmoid(action.logit);
  action.log_prob = gaussian_log_prob(action.logit, mu, policy.log_std);
  action.value = policy_value(policy, state);
  return action;
}

double mean_action(const TutorPolicy& policy, const TutorState& state) {
  return sigmoid(policy_mean_logit(policy, state));
}

double expert_weight(const TutorState& state, const ExpertConfig& config) {
  config.validate();
  const double d = state.ema_loss_norm - config.loss_peak;
  const double w = std::exp(-d * d / (2.0 * config.loss_width * config.loss_width));
  return std::clamp(w, config.min_weight, 1.0);
}

std::vector<double> expert_weights(std::span<const TutorState> states, const ExpertConfig& config) {
  std::vector<double> weights;
  weights.reserve(states.size());
  for (const auto& s : states) weights.push_back(expert_weight(s, config));
  return weights;
}

BCReport bc_pretrain(TutorPolicy& policy, const std::vector<TutorState>& states,
                     const std::vector<double>& targets, const BCConfig& config, Rng& rng) {
  config.validate();
  if (states.empty()) throw std::invalid_argument("behavioural cloning needs at least one state");
  if (states.size() != targets.size()) {
    throw std::invalid_argument("state/target count mismatch");
  }

  const int n = static_cast<int>(states.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int holdout = static_cast<int>(std::lround(config.holdout_fraction * n));
  const int train_n = n - holdout;
  if (train_n < 1) throw std::invalid_argument("holdout leaves no training states");

  const int dim = states.front().dimension();
  auto fill_inputs = [&](std::span<const int> idx) {
    Matrix m(static_cast<int>(idx.size()), dim);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::vector<double> v = states[idx[r]].to_vector();
      std::copy(v.begin(), v.end(), m.row(static_cast<int>(r)).begin());
    }
    return m;
  };
  auto mse_over = [&](std::span<const int> idx) {
    if (idx.empty()) return 0.0;
    const Matrix out = policy.actor.forward(fill_inputs(idx));
    double s = 0.0;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double d = sigmoid(out(static_cast<int>(r), 0)) - targets[idx[r]];
      s += d * d;
    }
    return s / static_cast<double>(idx.size());
  };

  Optimizer opt(OptimizerKind::kAdam, config.learning_rate, policy.actor.parameter_count());
  BCReport report;
  std::vector<int> train_idx(order.begin(), order.begin() + train_n);
  const std::vector<int> holdout_idx(order.begin() + train_n, order.end());

  std::vector<double> flat;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (int start = 0; start < train_n; start += config.minibatch_size) {
      const int m = std::min(config.minibatch_size, train_n - start);
      const std::span<const int> idx(train_idx.data() + start, static_cast<std::size_t>(m));
      const Matrix inputs = fill_inputs(idx);
      const ForwardTrace trace = policy.actor.forward_trace(inputs);
      Matrix upstream(m, 1);
      for (int r = 0; r < m; ++r) {
        const double w = sigmoid(trace.output()(r, 0));
        const double residual = w - targets[idx[r]];
        upstream(r, 0) = 2.0 * residual * w * (1.0 - w) / m;
      }
      const NetGradients grads = policy.actor.backward(trace, upstream);
      if (!grads.finite()) throw std::runtime_error("non-finite gradient in behavioural cloning");
      if (grads.squared_norm() > 0.0) {
        std::vector<double> params = policy.actor.parameters();
        DenseNet::flatten_gradients(grads, flat);
        opt.apply(params, flat);
        policy.actor.set_parameters(params);
      }
      ++report.steps;
    }
  }
  report.final_mse = holdout_idx.empty() ? mse_over(train_idx) : mse_over(holdout_idx);
  return report;
}

AdvantageResult compute_advantages(const RolloutBuffer& buffer, bool advantage_norm) {
  if (buffer.empty()) throw std::invalid_argument("empty rollout buffer");
  AdvantageResult result;
  result.advantages.reserve(buffer.size());
  result.returns.reserve(buffer.size());
  for (const auto& e : buffer) {
    result.returns.push_back(e.reward);
    result.advantages.push_back(e.reward - e.action.value);
  }
  if (advantage_norm) {
    const double n = static_cast<double>(buffer.size());
    double mean = 0.0;
    for (double a : result.advantages) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : result.advantages) var += (a - mean) * (a - mean);
    const double std = std::sqrt(var / n);
    for (double& a : result.advantages) a = (a - mean) / (std + 1e-8);
  }
  return result;
}

SurrogateEval eval_surrogate(const TutorPolicy& policy, std::span<const Experience> batch,
                             std::span<const double> advantages, const PPOConfig& config) {
  if (batch.empty()) throw std::invalid_argument("empty surrogate batch");
  if (batch.size() != advantages.size()) {
    throw std::invalid_argument("advantage count does not match batch");
  }
  const int m = static_cast<int>(batch.size());
  const Matrix inputs = batch_inputs(batch);
  const ForwardTrace trace = policy.actor.forward_trace(inputs);
  const double sigma = std::exp(policy.log_std);
  const double inv_var = 1.0 / (sigma * sigma);

  SurrogateEval eval;
  eval.per_sample_objective.resize(m);
  Matrix upstream(m, 1);
  double log_std_grad = 0.0;
  double ratio_sum = 0.0;
  int clipped_count = 0;

  for (int i = 0; i < m; ++i) {
    const double mu = trace.output()(i, 0);
    const double z = batch[i].action.logit;
    const double logp = gaussian_log_prob(z, mu, policy.log_std);
    const double rho = std::exp(logp - batch[i].action.log_prob);
    const double adv = advantages[i];

    const double unclipped = rho * adv;
    const double clipped =
        std::clamp(rho, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
    eval.per_sample_objective[i] = std::min(unclipped, clipped);

    // The gradient only flows through the active branch; a binding clip
    // kills it entirely.
    const double dobj_drho = unclipped <= clipped ? adv : 0.0;
    const double u = (z - mu) / sigma;
    upstream(i, 0) = dobj_drho * rho * (z - mu) * inv_var / m;
    log_std_grad += dobj_drho * rho * (u * u - 1.0) / m;

    ratio_sum += rho;
    if (std::abs(rho - 1.0) > config.clip_eps) ++clipped_count;
  }

  double obj = 0.0;
  for (double o : eval.per_sample_objective) obj += o;
  obj /= m;
  const double entropy = policy.log_std + 0.5 + kHalfLog2Pi;  // Gaussian entropy
  eval.objective = obj + config.entropy_coef * entropy;
  eval.mean_ratio = ratio_sum / m;
  eval.clip_fraction = static_cast<double>(clipped_count) / m;

  const NetGradients grads = policy.actor.backward(trace, upstream);
  DenseNet::flatten_gradients(grads, eval.gradient);
  eval.gradient.push_back(log_std_grad + config.entropy_coef);

  if (!std::isfinite(eval.objective)) {
    throw std::runtime_error("non-finite PPO surrogate objective");
  }
  for (double g : eval.gradient) {
    if (!std::isfinite(g)) throw std::runtime_error("non-finite PPO actor gradient");
  }
  return eval;
}

PPOReport ppo_update(TutorPolicy& policy, const RolloutBuffer& buffer, const PPOConfig& config,
                     Optimizer& actor_opt, Optimizer& critic_opt, Rng& rng) {
  config.validate();
  if (buffer.empty()) throw std::invalid_argument("PPO update on an empty buffer");

  const AdvantageResult adv = compute_advantages(buffer, config.advantage_norm);
  const int n = static_cast<int>(buffer.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  PPOReport report;
  double ratio_sum = 0.0, clip_sum = 0.0, actor_loss_sum = 0.0, critic_loss_sum = 0.0;

  std::vector<Experience> batch;
  std::vector<double> batch_adv;
  std::vector<double> neg_grad;
  for (int pass = 0; pass < config.ppo_epochs; ++pass) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += config.minibatch_size) {
      const int m = std::min(config.minibatch_size, n - start);
      batch.clear();
      batch_adv.clear();
      for (int k = 0; k < m; ++k) {
        batch.push_back(buffer[order[start + k]]);
        batch_adv.push_back(adv.advantages[order[start + k]]);
      }

      const SurrogateEval eval = eval_surrogate(policy, batch, batch_adv, config);
      if (report.minibatches == 0) {
        report.first.mean_ratio = eval.mean_ratio;
        report.first.clip_fraction = eval.clip_fraction;
        report.first.objectives = eval.per_sample_objective;
        report.first.advantages = batch_adv;
      }

      // Ascend the surrogate: descent step on its negation.
      neg_grad.assign(eval.gradient.size(), 0.0);
      for (std::size_t i = 0; i < neg_grad.size(); ++i) neg_grad[i] = -eval.gradient[i];
      std::vector<double> actor_params = policy.actor_parameters();
      actor_opt.apply(actor_params, neg_grad);
      policy.set_actor_parameters(actor_params);
      policy.log_std = std::clamp(policy.log_std, kLogStdMin, kLogStdMax);

      // Critic regression to the returns.
      const Matrix inputs = batch_inputs(batch);
      const ForwardTrace trace = policy.critic.forward_trace(inputs);
      Matrix upstream(m, 1);
      double value_loss = 0.0;
      for (int i = 0; i < m; ++i) {
        const double diff = trace.output()(i, 0) - adv.returns[order[start + i]];
        value_loss += diff * diff;
        upstream(i, 0) = config.value_coef * 2.0 * diff / m;
      }
      value_loss = config.value_coef * value_loss / m;
      if (!std::isfinite(value_loss)) throw std::runtime_error("non-finite PPO critic loss");
      const NetGradients cgrads = policy.critic.backward(trace, upstream);
      if (!cgrads.finite()) throw std::runtime_error("non-finite PPO critic gradient");
      std::vector<double> critic_params = policy.critic.parameters();
      std::vector<double> cflat;
      DenseNet::flatten_gradients(cgrads, cflat);
      critic_opt.apply(critic_params, cflat);
      policy.critic.set_parameters(critic_params);

      ratio_sum += eval.mean_ratio;
      clip_sum += eval.clip_fraction;
      actor_loss_sum += -eval.objective;
      critic_loss_sum += value_loss;
      ++report.minibatches;
    }
  }

  report.mean_ratio = ratio_sum / report.minibatches;
  report.clip_fraction = clip_sum / report.minibatches;
  report.actor_loss = actor_loss_sum / report.minibatches;
  report.critic_loss = critic_loss_sum / report.minibatches;
  return report;
}

}  // namespace tsrl
