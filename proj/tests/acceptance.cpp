// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Criteria 8-10 share one 5-seed, 3-mode comparison at the default
// configuration; criterion 11 drives the CLI binary from $TSRL_CLI_BIN.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tsrl/config.hpp"
#include "tsrl/metrics.hpp"
#include "tsrl/orchestrator.hpp"
#include "tsrl/reward.hpp"

using namespace tsrl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<bool(std::string&)>& fn) {
  std::string detail;
  bool pass = false;
  const auto start = std::chrono::steady_clock::now();
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              seconds, detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// 1. Reward table exactness.
bool criterion_reward(std::string& detail) {
  Rng rng(101);
  for (int i = 0; i < 10000; ++i) {
    RewardConfig config;
    config.c_rew = rng.uniform(1e-9, 1.0);
    const double a = rng.uniform();
    const double b = rng.uniform();
    if (compute_reward({false, a, true, b}, config) != 1.0) return false;
    if (compute_reward({true, a, false, b}, config) != -1.0) return false;
    const double stay_correct = compute_reward({true, a, true, b}, config);
    const double stay_error = compute_reward({false, a, false, b}, config);
    if (std::fabs(stay_correct - config.c_rew * (b - a)) > 1e-12) return false;
    if (std::fabs(stay_error + config.c_rew * (b - a)) > 1e-12) return false;
  }
  detail = "10000 randomized points, 4 cases each";
  return true;
}

// ---------------------------------------------------------------------------
// 2. EMA closed form.
bool criterion_ema(std::string& detail) {
  Rng rng(102);
  StateConfig config;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    config.beta = rng.uniform(0.05, 0.95);
    const int k = 1 + static_cast<int>(rng.below(50));
    std::vector<double> losses(k);
    for (auto& l : losses) l = rng.uniform(0.0, 5.0);
    SampleRecord record;
    for (double l : losses) {
      record = update_after_epoch(record, l, rng.below(2) == 0, config);
    }
    double closed = std::pow(config.beta, k - 1) * losses[0];
    for (int j = 2; j <= k; ++j) {
      closed += (1.0 - config.beta) * std::pow(config.beta, k - j) * losses[j - 1];
    }
    worst = std::max(worst, std::fabs(record.ema_loss - closed));
  }
  detail = "1000 sequences, worst |recursion-closed form| = " + std::to_string(worst);
  return worst < 1e-9;
}

// ---------------------------------------------------------------------------
// 3. Gradient checks (student backprop + PPO surrogate actor gradient).
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> params, double h) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double hi = f(params);
    params[i] = saved - h;
    const double lo = f(params);
    params[i] = saved;
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-6});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

bool near_relu_kink(const DenseNet& net, const Matrix& inputs) {
  const ForwardTrace trace = net.forward_trace(inputs);
  for (int l = 0; l < net.layer_count(); ++l) {
    if (net.layer(l).activation != Activation::kRelu) continue;
    for (double v : trace.pre[l].data()) {
      if (std::fabs(v) < 1e-4) return true;
    }
  }
  return false;
}

bool criterion_gradients(std::string& detail) {
  Rng rng(103);
  double worst_student = 0.0;

  // Student backprop on random nets up to 8-32-8 against central FD of a
  // random linear functional of the outputs.
  int done = 0;
  while (done < 100) {
    const int in_dim = 2 + static_cast<int>(rng.below(7));
    const int hidden = 2 + static_cast<int>(rng.below(31));
    const int out_dim = 2 + static_cast<int>(rng.below(7));
    const Activation act = rng.below(2) == 0 ? Activation::kRelu : Activation::kTanh;
    DenseNet net = DenseNet::make(in_dim, {hidden}, out_dim, act, rng);
    Matrix inputs(3, in_dim);
    for (double& v : inputs.data()) v = rng.uniform(-1.0, 1.0);
    if (near_relu_kink(net, inputs)) continue;

    Matrix coeff(3, out_dim);
    for (double& v : coeff.data()) v = rng.uniform(-1.0, 1.0);
    const auto loss_at = [&](const std::vector<double>& params) {
      DenseNet probe = net;
      probe.set_parameters(params);
      const Matrix out = probe.forward(inputs);
      double s = 0.0;
      for (int i = 0; i < out.rows(); ++i) {
        for (int o = 0; o < out.cols(); ++o) s += coeff(i, o) * out(i, o);
      }
      return s;
    };

    std::vector<double> analytic;
    DenseNet::flatten_gradients(net.backward(net.forward_trace(inputs), coeff), analytic);
    worst_student =
        std::max(worst_student, max_rel_err(analytic, fd_gradient(loss_at, net.parameters(), 1e-5)));
    ++done;
  }

  // PPO clipped-surrogate actor gradient against FD of an independently
  // coded objective, with the policy perturbed off the collection point.
  PPOConfig config;
  config.entropy_coef = 0.01;
  double worst_ppo = 0.0;
  done = 0;
  while (done < 100) {
    TutorPolicy policy = TutorPolicy::make(6, {6}, std::log(0.5), rng);
    std::vector<Experience> batch;
    std::vector<double> advantages;
    for (int i = 0; i < 5; ++i) {
      Experience e;
      e.state.feature = {rng.uniform(-1.0, 1.0)};
      e.state.confidence = rng.uniform();
      e.state.correct_onehot = rng.below(2) == 0 ? std::array<double, 2>{1.0, 0.0}
                                                 : std::array<double, 2>{0.0, 1.0};
      e.state.ema_loss_norm = rng.uniform();
      e.state.forget_norm = rng.uniform();
      e.action = sample_action(policy, e.state, rng);
      batch.push_back(e);
      const double mag = rng.uniform(0.2, 2.0);
      advantages.push_back(rng.below(2) == 0 ? mag : -mag);
    }
    std::vector<double> params = policy.actor_parameters();
    for (auto& p : params) p += rng.uniform(-0.08, 0.08);
    policy.set_actor_parameters(params);

    bool near_kink = false;
    for (const auto& e : batch) {
      const double mu = policy_mean_logit(policy, e.state);
      const double rho =
          std::exp(gaussian_log_prob(e.action.logit, mu, policy.log_std) - e.action.log_prob);
      if (std::fabs(rho - (1.0 - config.clip_eps)) < 1e-3 ||
          std::fabs(rho - (1.0 + config.clip_eps)) < 1e-3) {
        near_kink = true;
      }
    }
    if (near_kink) continue;

    const auto objective_at = [&](const std::vector<double>& actor_params) {
      TutorPolicy probe = policy;
      probe.set_actor_parameters(actor_params);
      double total = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double mu = policy_mean_logit(probe, batch[i].state);
        const double rho = std::exp(
            gaussian_log_prob(batch[i].action.logit, mu, probe.log_std) - batch[i].action.log_prob);
        const double clipped = std::clamp(rho, 1.0 - config.clip_eps, 1.0 + config.clip_eps);
        total += std::min(rho * advantages[i], clipped * advantages[i]);
      }
      total /= static_cast<double>(batch.size());
      const double entropy = probe.log_std + 0.5 + 0.5 * std::log(2.0 * 3.14159265358979323846);
      return total + config.entropy_coef * entropy;
    };

    const SurrogateEval eval = eval_surrogate(policy, batch, advantages, config);
    worst_ppo = std::max(
        worst_ppo, max_rel_err(eval.gradient, fd_gradient(objective_at, policy.actor_parameters(), 1e-6)));
    ++done;
  }

  detail = "student worst rel err " + std::to_string(worst_student) + ", ppo worst rel err " +
           std::to_string(worst_ppo) + " over 100 instances each";
  return worst_student < 1e-4 && worst_ppo < 1e-4;
}

// ---------------------------------------------------------------------------
// 4. Baseline equivalence at full default scale.
bool criterion_baseline_equivalence(std::string& detail) {
  RunConfig baseline;
  baseline.mode = RunMode::kBaseline;
  baseline.seed = 1;
  RunConfig stubbed = baseline;
  stubbed.mode = RunMode::kTsrl;
  stubbed.constant_tutor_weight = 1.0;

  const RunArtifacts a = train(baseline);
  const RunArtifacts b = train(stubbed);
  if (a.step_losses.size() != b.step_losses.size() || a.step_losses.empty()) {
    detail = "step counts differ";
    return false;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.step_losses.size(); ++i) {
    worst = std::max(worst, std::fabs(a.step_losses[i] - b.step_losses[i]));
  }
  std::ostringstream os;
  os << a.step_losses.size() << " steps over 40 epochs, worst |delta| = " << worst;
  detail = os.str();
  return worst <= 1e-9;
}

// ---------------------------------------------------------------------------
// 5. Behavioural-cloning fidelity on warmup-harvested states.
bool criterion_bc(std::string& detail) {
  RunConfig config;
  config.mode = RunMode::kTsrl;
  config.seed = 2;
  Trainer trainer(config);
  const std::vector<TutorState> states = trainer.run_warmup();
  const BCReport report = trainer.run_bc(states);
  std::ostringstream os;
  os << states.size() << " states, held-out mse = " << report.final_mse;
  detail = os.str();
  return report.final_mse < 0.01;
}

// ---------------------------------------------------------------------------
// 6. PPO first-pass sanity.
bool criterion_ppo_sanity(std::string& detail) {
  Rng rng(106);
  TutorPolicy policy = TutorPolicy::make(37, {32, 32}, std::log(0.5), rng);
  RolloutBuffer buffer;
  for (int i = 0; i < 256; ++i) {
    Experience e;
    e.state.feature.resize(32);
    for (auto& f : e.state.feature) f = rng.uniform(-1.0, 1.0);
    e.state.confidence = rng.uniform();
    e.state.correct_onehot = rng.below(2) == 0 ? std::array<double, 2>{1.0, 0.0}
                                               : std::array<double, 2>{0.0, 1.0};
    e.state.ema_loss_norm = rng.uniform();
    e.state.forget_norm = rng.uniform();
    e.action = sample_action(policy, e.state, rng);
    e.reward = rng.uniform(-1.0, 1.0);
    buffer.push_back(e);
  }
  PPOConfig config;
  Optimizer actor_opt(config.optimizer, config.actor_lr, policy.actor_parameter_count());
  Optimizer critic_opt(config.optimizer, config.critic_lr, policy.critic.parameter_count());
  const PPOReport report = ppo_update(policy, buffer, config, actor_opt, critic_opt, rng);

  if (std::fabs(report.first.mean_ratio - 1.0) > 1e-6) {
    detail = "mean ratio " + std::to_string(report.first.mean_ratio);
    return false;
  }
  if (report.first.clip_fraction != 0.0) {
    detail = "clip fraction " + std::to_string(report.first.clip_fraction);
    return false;
  }
  for (std::size_t i = 0; i < report.first.objectives.size(); ++i) {
    if (report.first.objectives[i] != report.first.advantages[i]) {
      detail = "objective != advantage on the first minibatch";
      return false;
    }
  }
  detail = "mean ratio 1, clip fraction 0, objective == advantage per sample";
  return true;
}

// ---------------------------------------------------------------------------
// 7. Metric oracles.
double auc_pairwise_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  double u = 0.0;
  int pos = 0, neg = 0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    ++pos;
    for (std::size_t q = 0; q < scores.size(); ++q) {
      if (labels[q] != 0) continue;
      if (scores[p] > scores[q]) {
        u += 1.0;
      } else if (scores[p] == scores[q]) {
        u += 0.5;
      }
    }
  }
  for (int y : labels) neg += y == 0 ? 1 : 0;
  return u / (static_cast<double>(pos) * neg);
}

double eer_sweep_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> pos_scores, neg_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (labels[i] == 1 ? pos_scores : neg_scores).push_back(scores[i]);
  }
  std::sort(pos_scores.begin(), pos_scores.end());
  std::sort(neg_scores.begin(), neg_scores.end());
  const double lo = *std::min_element(scores.begin(), scores.end()) - 1e-6;
  const double hi = *std::max_element(scores.begin(), scores.end()) + 1e-6;
  const int steps = 100000;
  double prev_fpr = 0.0, prev_d = 1.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = hi - (hi - lo) * static_cast<double>(k) / steps;
    const auto pos_below =
        std::lower_bound(pos_scores.begin(), pos_scores.end(), t) - pos_scores.begin();
    const auto neg_above =
        neg_scores.end() - std::lower_bound(neg_scores.begin(), neg_scores.end(), t);
    const double fnr = static_cast<double>(pos_below) / pos_scores.size();
    const double fpr = static_cast<double>(neg_above) / neg_scores.size();
    const double d = fnr - fpr;
    if (d <= 0.0) {
      if (d == 0.0) return fpr;
      const double a = prev_d / (prev_d - d);
      return prev_fpr + a * (fpr - prev_fpr);
    }
    prev_fpr = fpr;
    prev_d = d;
  }
  return 1.0;
}

bool criterion_metrics(std::string& detail) {
  Rng rng(107);
  double worst_eer = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(47));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    int pos = 0;
    do {
      pos = 0;
      for (int i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(rng.below(129)) / 128.0;
        pos += (labels[i] = static_cast<int>(rng.below(2)));
      }
    } while (pos == 0 || pos == n);

    if (auc(scores, labels) != auc_pairwise_oracle(scores, labels)) {
      detail = "auc mismatch on trial " + std::to_string(trial);
      return false;
    }
    worst_eer = std::max(worst_eer,
                         std::fabs(eer(scores, labels) - eer_sweep_oracle(scores, labels)));
  }
  detail = "200 score sets; auc exact, worst eer delta = " + std::to_string(worst_eer);
  return worst_eer < 1e-9;
}

// ---------------------------------------------------------------------------
// Shared comparison runs for criteria 8-10.
struct ComparisonData {
  // per mode, per seed
  std::map<std::string, std::vector<RunArtifacts>> runs;
  std::vector<std::uint64_t> seeds;
};

const ComparisonData& comparison_runs() {
  static const ComparisonData data = [] {
    ComparisonData d;
    d.seeds = {1, 2, 3, 4, 5};
    for (const RunMode mode : {RunMode::kBaseline, RunMode::kCl, RunMode::kTsrl}) {
      for (const std::uint64_t seed : d.seeds) {
        RunConfig config;
        config.mode = mode;
        config.seed = seed;
        d.runs[run_mode_name(mode)].push_back(train(config));
      }
    }
    return d;
  }();
  return data;
}

// 8. Hard-sample reduction, directional.
bool criterion_hard_fraction(std::string& detail) {
  const ComparisonData& data = comparison_runs();
  const int n_seeds = 3;
  const auto& base = data.runs.at("baseline");
  const auto& tsrl = data.runs.at("tsrl");

  const int total_epochs = static_cast<int>(base[0].rows.size());
  const int warmup = base[0].summary.warmup_last;

  std::vector<double> base_curve(total_epochs, 0.0), tsrl_curve(total_epochs, 0.0);
  double base_final = 0.0, tsrl_final = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    for (int e = 0; e < total_epochs; ++e) {
      base_curve[e] += base[s].rows[e].hard_fraction / n_seeds;
      tsrl_curve[e] += tsrl[s].rows[e].hard_fraction / n_seeds;
    }
    base_final += base[s].rows.back().hard_fraction / n_seeds;
    tsrl_final += tsrl[s].rows.back().hard_fraction / n_seeds;
  }

  int below = 0;
  int post = 0;
  for (int e = warmup; e < total_epochs; ++e) {
    ++post;
    if (tsrl_curve[e] <= base_curve[e]) ++below;
  }
  std::ostringstream os;
  os << "final hard fraction tsrl " << tsrl_final << " vs baseline " << base_final << "; tsrl <= baseline on " << below << "/" << post << " post-warmup epochs";
  detail = os.str();
  return tsrl_final <= base_final && below * 10 >= post * 7;
}

// 9. Shifted-test AUC ordering, directional.
bool criterion_auc_ordering(std::string& detail) {
  const ComparisonData& data = comparison_runs();
  std::map<std::string, double> mean_auc;
  for (const auto& [mode, runs] : data.runs) {
    std::vector<double> finals;
    for (const auto& r : runs) finals.push_back(r.summary.final_shift.auc);
    mean_auc[mode] = mean_of(finals);
  }
  std::ostringstream os;
  os << "mean final shifted AUC: tsrl " << mean_auc["tsrl"] << ", cl " << mean_auc["cl"]
     << ", baseline " << mean_auc["baseline"];
  detail = os.str();
  const double gap = mean_auc["tsrl"] - mean_auc["baseline"];
  return mean_auc["tsrl"] > mean_auc["baseline"] && mean_auc["tsrl"] >= mean_auc["cl"] - 0.005 &&
         gap > 0.0;
}

// 10. Curriculum behaviour probe: noise weighted below hard.
bool criterion_curriculum(std::string& detail) {
  const ComparisonData& data = comparison_runs();
  int ok = 0;
  std::ostringstream os;
  for (const auto& run : data.runs.at("tsrl")) {
    const TagMeanWeights& w = run.summary.final_weight_by_tag;
    if (w.noise < w.hard) ++ok;
    os << " [hard " << w.hard << " vs noise " << w.noise << "]";
  }
  detail = "noise < hard in " + std::to_string(ok) + "/5 seeds;" + os.str();
  return ok >= 4;
}

// ---------------------------------------------------------------------------
// 11. CLI determinism.
int run_command(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool criterion_cli_determinism(std::string& detail) {
  const char* env = std::getenv("TSRL_CLI_BIN");
  if (!env) {
    detail = "TSRL_CLI_BIN is not set";
    return false;
  }
  const fs::path work = fs::temp_directory_path() / "tsrl_acceptance_cli";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string base =
      std::string(env) + " train --mode tsrl --seed 7 --out ";
  if (run_command(base + (work / "a").string() + " > /dev/null 2>&1") != 0) {
    detail = "first train invocation failed";
    return false;
  }
  if (run_command(base + (work / "b").string() + " > /dev/null 2>&1") != 0) {
    detail = "second train invocation failed";
    return false;
  }
  const bool metrics_equal =
      slurp(work / "a" / "tsrl-seed7" / "metrics.csv") == slurp(work / "b" / "tsrl-seed7" / "metrics.csv");
  const bool summary_equal =
      slurp(work / "a" / "tsrl-seed7" / "summary.json") == slurp(work / "b" / "tsrl-seed7" / "summary.json");
  detail = std::string("metrics.csv ") + (metrics_equal ? "identical" : "DIFFER") +
           ", summary.json " + (summary_equal ? "identical" : "DIFFER");
  return metrics_equal && summary_equal;
}

}  // namespace

int main() {
  run_criterion(1, "reward table exactness", criterion_reward);
  run_criterion(2, "ema closed form", criterion_ema);
  run_criterion(3, "gradient checks", criterion_gradients);
  run_criterion(4, "baseline equivalence", criterion_baseline_equivalence);
  run_criterion(5, "behavioural cloning fidelity", criterion_bc);
  run_criterion(6, "ppo first-pass sanity", criterion_ppo_sanity);
  run_criterion(7, "metric oracles", criterion_metrics);
  run_criterion(8, "hard-sample reduction", criterion_hard_fraction);
  run_criterion(9, "shifted-test auc ordering", criterion_auc_ordering);
  run_criterion(10, "curriculum weighting probe", criterion_curriculum);
  run_criterion(11, "cli determinism", criterion_cli_determinism);

  if (g_failures == 0) {
    std::printf("all 11 acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures;
}
