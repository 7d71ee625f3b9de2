#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tsrl/orchestrator.hpp"

using namespace tsrl;

namespace {

/// Small, fast configuration shared by the pipeline tests.
RunConfig small_config(RunMode mode, std::uint64_t seed = 11) {
  RunConfig config;
  config.mode = mode;
  config.seed = seed;
  config.n_warmup_epochs = 2;
  config.n_total_epochs = 6;
  config.batch_size = 32;
  config.task.n_train = 240;
  config.task.n_test = 120;
  config.bc.epochs = 10;
  return config;
}

}  // namespace

TEST_CASE("warmup runs uniform weights and observes every sample") {
  Trainer trainer(small_config(RunMode::kTsrl));
  const std::vector<TutorState> states = trainer.run_warmup();
  CHECK(states.size() == 240);
  for (const auto& row : trainer.rows()) CHECK(row.mean_weight == 1.0);
  for (const auto& record : trainer.registry()) {
    CHECK(record.epochs_observed == 2);
    CHECK(record.ema_initialized);
  }
}

TEST_CASE("warmup trajectory is bit-identical to the baseline arm") {
  Trainer baseline(small_config(RunMode::kBaseline));
  Trainer tsrl(small_config(RunMode::kTsrl));
  baseline.run_warmup();
  tsrl.run_warmup();
  REQUIRE(baseline.step_losses().size() == tsrl.step_losses().size());
  for (std::size_t i = 0; i < baseline.step_losses().size(); ++i) {
    CHECK(baseline.step_losses()[i] == tsrl.step_losses()[i]);
  }
  CHECK(baseline.student().parameters() == tsrl.student().parameters());
}

TEST_CASE("cl and tsrl share the first two phases exactly") {
  Trainer cl(small_config(RunMode::kCl));
  Trainer tsrl(small_config(RunMode::kTsrl));
  const auto states_cl = cl.run_warmup();
  const auto states_tsrl = tsrl.run_warmup();
  const BCReport bc_cl = cl.run_bc(states_cl);
  const BCReport bc_tsrl = tsrl.run_bc(states_tsrl);
  CHECK(cl.step_losses() == tsrl.step_losses());
  CHECK(bc_cl.final_mse == bc_tsrl.final_mse);
  CHECK(cl.tutor()->actor.parameters() == tsrl.tutor()->actor.parameters());
}

TEST_CASE("a tutor epoch emits one experience per sample") {
  Trainer trainer(small_config(RunMode::kTsrl));
  trainer.run_bc(trainer.run_warmup());
  const Trainer::TsrlEpochResult result = trainer.run_tsrl_epoch();
  CHECK(result.buffer.size() == 240);
  CHECK(result.row.epoch == 3);
  for (const auto& e : result.buffer) {
    CHECK(e.action.weight > 0.0);
    CHECK(e.action.weight < 1.0);
    CHECK(std::fabs(e.reward) <= 1.0);
    CHECK(e.done);
  }
}

TEST_CASE("tutor epochs cannot run before warmup") {
  Trainer trainer(small_config(RunMode::kTsrl));
  CHECK_THROWS_AS(trainer.run_tsrl_epoch(), std::logic_error);
}

TEST_CASE("zero-weight override freezes the student and zeroes the rewards") {
  RunConfig config = small_config(RunMode::kTsrl);
  config.constant_tutor_weight = 0.0;
  Trainer trainer(config);
  trainer.run_warmup();
  const std::vector<double> before = trainer.student().parameters();
  const long steps_before = trainer.student_optimizer().step_count();
  const Trainer::TsrlEpochResult result = trainer.run_tsrl_epoch();
  CHECK(trainer.student().parameters() == before);
  CHECK(trainer.student_optimizer().step_count() == steps_before);
  CHECK(result.row.mean_reward == 0.0);
  CHECK(result.row.mean_weight == 0.0);
  CHECK(result.buffer.empty());
}

TEST_CASE("unit-weight override reproduces baseline step losses") {
  RunConfig baseline_config = small_config(RunMode::kBaseline, 21);
  RunConfig stubbed = small_config(RunMode::kTsrl, 21);
  stubbed.constant_tutor_weight = 1.0;

  const RunArtifacts a = train(baseline_config);
  const RunArtifacts b = train(stubbed);
  REQUIRE(a.step_losses.size() == b.step_losses.size());
  for (std::size_t i = 0; i < a.step_losses.size(); ++i) {
    CHECK(std::fabs(a.step_losses[i] - b.step_losses[i]) <= 1e-9);
  }
  CHECK(b.summary.ppo_updates == 0);
}

TEST_CASE("full runs keep complete, ordered epoch rows") {
  for (const RunMode mode : {RunMode::kBaseline, RunMode::kCl, RunMode::kTsrl}) {
    const RunArtifacts artifacts = train(small_config(mode));
    REQUIRE(artifacts.rows.size() == 6);
    for (int e = 0; e < 6; ++e) {
      CHECK(artifacts.rows[e].epoch == e + 1);
      CHECK(artifacts.rows[e].hard_fraction >= 0.0);
      CHECK(artifacts.rows[e].hard_fraction <= 1.0);
      CHECK(artifacts.rows[e].eer_in >= 0.0);
      CHECK(artifacts.rows[e].eer_in <= 1.0);
    }
  }
}

TEST_CASE("phase boundaries and ppo counts land in the summary") {
  const RunArtifacts tsrl = train(small_config(RunMode::kTsrl));
  CHECK(tsrl.summary.warmup_first == 1);
  CHECK(tsrl.summary.warmup_last == 2);
  CHECK(tsrl.summary.tsrl_first == 3);
  CHECK(tsrl.summary.tsrl_last == 6);
  CHECK(tsrl.summary.ppo_updates == 4);
  CHECK(tsrl.summary.bc_final_mse.has_value());
  CHECK(tsrl.tutor.has_value());

  const RunArtifacts cl = train(small_config(RunMode::kCl));
  CHECK(cl.summary.ppo_updates == 0);
  CHECK(cl.summary.bc_final_mse.has_value());

  const RunArtifacts baseline = train(small_config(RunMode::kBaseline));
  CHECK(baseline.summary.ppo_updates == 0);
  CHECK_FALSE(baseline.summary.bc_final_mse.has_value());
  CHECK_FALSE(baseline.tutor.has_value());
}

TEST_CASE("every reward brackets exactly one optimizer step") {
  Trainer trainer(small_config(RunMode::kTsrl));
  trainer.run_bc(trainer.run_warmup());
  const long before = trainer.student_optimizer().step_count();
  const Trainer::TsrlEpochResult result = trainer.run_tsrl_epoch();
  const long after = trainer.student_optimizer().step_count();
  // 240 samples / batch 32 -> 8 batches, each bracketed by the snapshots.
  CHECK(after - before == 8);
  CHECK(result.buffer.size() == 240);
}

TEST_CASE("identical configs train to identical artifacts") {
  const RunConfig config = small_config(RunMode::kTsrl, 5);
  const RunArtifacts a = train(config);
  const RunArtifacts b = train(config);
  CHECK(a.step_losses == b.step_losses);
  CHECK(metrics_csv(a.rows) == metrics_csv(b.rows));
  CHECK(a.student.parameters() == b.student.parameters());
  CHECK(a.final_epoch_weights == b.final_epoch_weights);
}

TEST_CASE("modes of one seed share the dataset; other seeds differ") {
  const RunConfig a = small_config(RunMode::kBaseline, 5);
  const RunConfig b = small_config(RunMode::kTsrl, 5);
  const RunConfig c = small_config(RunMode::kBaseline, 6);
  CHECK(generate_task(a.effective_task()).train.inputs.data() ==
        generate_task(b.effective_task()).train.inputs.data());
  CHECK(generate_task(a.effective_task()).train.inputs.data() !=
        generate_task(c.effective_task()).train.inputs.data());
}

TEST_CASE("invalid configs are rejected before any work") {
  RunConfig config = small_config(RunMode::kTsrl);
  config.n_warmup_epochs = 6;  // not smaller than total
  CHECK_THROWS_AS(train(config), std::invalid_argument);

  config = small_config(RunMode::kTsrl);
  config.reward.c_rew = 2.0;
  CHECK_THROWS_AS(train(config), std::invalid_argument);

  config = small_config(RunMode::kTsrl);
  config.constant_tutor_weight = 1.5;
  CHECK_THROWS_AS(train(config), std::invalid_argument);
}

TEST_CASE("epoch hooks observe the registry after every epoch") {
  RunConfig config = small_config(RunMode::kBaseline);
  std::vector<int> epochs_seen;
  TrainHooks hooks;
  hooks.after_epoch = [&](int epoch, const Registry& registry) {
    epochs_seen.push_back(epoch);
    CHECK(registry.size() == 240);
  };
  train(config, hooks);
  CHECK(epochs_seen == std::vector<int>{1, 2, 3, 4, 5, 6});
}
