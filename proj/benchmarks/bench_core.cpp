#include <benchmark/benchmark.h>

#include "tsrl/metrics.hpp"
#include "tsrl/student.hpp"
#include "tsrl/task.hpp"
#include "tsrl/tutor.hpp"

using namespace tsrl;

namespace {

Matrix random_inputs(int n, int dim, Rng& rng) {
  Matrix m(n, dim);
  for (double& v : m.data()) v = rng.uniform(-2.0, 2.0);
  return m;
}

}  // namespace

static void BM_StudentForward(benchmark::State& state) {
  Rng rng(1);
  const DenseNet net = DenseNet::make(8, {32, 32}, 2, Activation::kRelu, rng);
  const Matrix inputs = random_inputs(static_cast<int>(state.range(0)), 8, rng);
  for (auto _ : state) {
    auto out = student_forward(net, inputs);
    benchmark::DoNotOptimize(out.probabilities.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StudentForward)->Arg(64)->Arg(512)->Arg(2048);

static void BM_TrainStep(benchmark::State& state) {
  Rng rng(2);
  DenseNet net = DenseNet::make(8, {32, 32}, 2, Activation::kRelu, rng);
  Optimizer opt(OptimizerKind::kAdam, 1e-3, net.parameter_count());
  const int n = static_cast<int>(state.range(0));
  const Matrix inputs = random_inputs(n, 8, rng);
  std::vector<int> labels(n);
  for (auto& y : labels) y = static_cast<int>(rng.below(2));
  const std::vector<double> weights(n, 0.7);
  for (auto _ : state) {
    auto report = train_step(net, opt, inputs, labels, weights);
    benchmark::DoNotOptimize(report.loss_before);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(256);

static void BM_PPOUpdate(benchmark::State& state) {
  Rng rng(3);
  TutorPolicy policy = TutorPolicy::make(37, {32, 32}, -0.693, rng);
  RolloutBuffer buffer;
  for (int i = 0; i < state.range(0); ++i) {
    TutorState s;
    s.feature.resize(32);
    for (auto& f : s.feature) f = rng.uniform(-1.0, 1.0);
    s.confidence = rng.uniform();
    s.correct_onehot = {1.0, 0.0};
    s.ema_loss_norm = rng.uniform();
    s.forget_norm = rng.uniform();
    Experience e;
    e.state = s;
    e.action = sample_action(policy, s, rng);
    e.reward = rng.uniform(-1.0, 1.0);
    buffer.push_back(e);
  }
  PPOConfig config;
  for (auto _ : state) {
    Optimizer actor_opt(config.optimizer, config.actor_lr, policy.actor_parameter_count());
    Optimizer critic_opt(config.optimizer, config.critic_lr, policy.critic.parameter_count());
    auto report = ppo_update(policy, buffer, config, actor_opt, critic_opt, rng);
    benchmark::DoNotOptimize(report.actor_loss);
  }
  state.SetItemsProcessed(state.iterations() * buffer.size());
}
BENCHMARK(BM_PPOUpdate)->Arg(512)->Arg(2000);

static void BM_Auc(benchmark::State& state) {
  Rng rng(4);
  const int n = static_cast<int>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.below(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(10000);

static void BM_GenerateTask(benchmark::State& state) {
  TaskSpec spec;
  spec.n_train = static_cast<int>(state.range(0));
  spec.n_test = spec.n_train / 2;
  for (auto _ : state) {
    auto task = generate_task(spec);
    benchmark::DoNotOptimize(task.train.inputs.data());
  }
  state.SetItemsProcessed(state.iterations() * spec.n_train);
}
BENCHMARK(BM_GenerateTask)->Arg(2000);

BENCHMARK_MAIN();
