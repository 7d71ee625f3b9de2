#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsrl/net.hpp"
#include "tsrl/reward.hpp"
#include "tsrl/state.hpp"
#include "tsrl/student.hpp"
#include "tsrl/task.hpp"
#include "tsrl/tutor.hpp"

namespace tsrl {

/// The three comparison arms: uniform weighting, the frozen cloned policy
/// (no PPO), and the full tutor loop.
enum class RunMode { kBaseline, kCl, kTsrl };

RunMode run_mode_from_name(const std::string& name);
std::string run_mode_name(RunMode mode);

struct StudentConfig {
  std::vector<int> hidden_dims = {32, 32};
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;

  void validate() const;
};

struct TutorNetConfig {
  std::vector<int> hidden_dims = {32, 32};
  double log_std_init = -0.6931471805599453;  // ln(0.5)

  void validate() const;
};

struct RunConfig {
  RunMode mode = RunMode::kTsrl;
  std::uint64_t seed = 1;
  int n_warmup_epochs = 5;
  int n_total_epochs = 40;
  int batch_size = 64;
  /// Fold the run seed into the dataset seed so different seeds are
  /// independent replicates (the three modes of one seed still share data).
  bool derive_task_seed = true;
  StudentConfig student;
  TutorNetConfig tutor_net;
  StateConfig state;
  PPOConfig ppo;
  RewardConfig reward;
  ExpertConfig expert;
  BCConfig bc;
  TaskSpec task;
  /// Test hook: replaces every tutor decision with this fixed weight and
  /// disables cloning, experience collection and PPO. With 1.0 the run must
  /// reproduce baseline training losses bit for bit.
  std::optional<double> constant_tutor_weight;

  void validate() const;
  /// The task spec actually generated (seed derivation applied).
  TaskSpec effective_task() const;
};

struct EpochRow {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean unweighted cross entropy over the epoch
  double auc_in = 0.0, acc_in = 0.0, eer_in = 0.0;
  double auc_shift = 0.0, acc_shift = 0.0, eer_shift = 0.0;
  double hard_fraction = 0.0;
  double mean_weight = 0.0;
  double mean_reward = 0.0;
  double clip_fraction = 0.0;
};

struct SplitMetrics {
  double auc = 0.0, acc = 0.0, eer = 0.0;
};

struct TagMeanWeights {
  double easy = 0.0, hard = 0.0, noise = 0.0;
};

struct RunSummary {
  RunMode mode = RunMode::kBaseline;
  std::uint64_t seed = 0;
  int warmup_first = 0, warmup_last = 0;  // inclusive 1-based epoch indices
  int tsrl_first = 0, tsrl_last = 0;
  int ppo_updates = 0;
  std::optional<double> bc_final_mse;
  SplitMetrics final_in, final_shift;
  double final_train_loss = 0.0;
  double final_hard_fraction = 0.0;
  /// Mean weight assigned in the final epoch, grouped by generator tag.
  TagMeanWeights final_weight_by_tag;
};

struct RunArtifacts {
  std::vector<EpochRow> rows;
  RunSummary summary;
  std::vector<double> step_losses;         // loss before every optimizer step, in order
  std::vector<double> final_epoch_weights; // indexed by sample id
  DenseNet student;
  std::optional<TutorPolicy> tutor;
  GeneratedTask task;
};

struct TrainHooks {
  /// Called after every completed epoch with the updated registry.
  std::function<void(int epoch, const Registry&)> after_epoch;
};

/// Drives one run through its phases: uniform warmup (with a state harvest
/// at the end), behavioural cloning of the expert, then per-mode epochs.
/// All randomness flows through the single run generator; the tutor is not
/// constructed until the cloning phase so the warmup consumes identical
/// draws in every mode.
class Trainer {
 public:
  explicit Trainer(const RunConfig& config, TrainHooks hooks = {});

  /// Uniform-weight epochs 1..n_warmup; harvests tutor states from a full
  /// forward pass after the final warmup epoch (skipped in baseline mode).
  std::vector<TutorState> run_warmup();

  BCReport run_bc(const std::vector<TutorState>& states);

  struct TsrlEpochResult {
    EpochRow row;
    RolloutBuffer buffer;  // one experience per sample; empty when frozen
  };
  /// One post-warmup epoch under the configured mode: build states, decide
  /// weights, snapshot/update/re-snapshot per batch, then registry update,
  /// PPO (tsrl mode only) and buffer handoff.
  TsrlEpochResult run_tsrl_epoch();

  /// One post-warmup epoch with all weights 1.0 (baseline arm).
  EpochRow run_uniform_epoch();

  RunArtifacts finish();

  const GeneratedTask& task() const { return task_; }
  const Registry& registry() const { return registry_; }
  const DenseNet& student() const { return student_; }
  const Optimizer& student_optimizer() const { return student_opt_; }
  const TutorPolicy* tutor() const { return tutor_ ? &*tutor_ : nullptr; }
  const std::vector<EpochRow>& rows() const { return rows_; }
  const std::vector<double>& step_losses() const { return step_losses_; }
  int epochs_completed() const { return epoch_; }

 private:
  enum class WeightSource { kUniform, kFrozenPolicy, kSampledPolicy, kConstant };

  void ensure_tutor();
  EpochRow run_epoch(WeightSource source, RolloutBuffer* buffer);
  Matrix gather_inputs(const std::vector<int>& ids) const;
  std::vector<int> gather_labels(const std::vector<int>& ids) const;

  RunConfig config_;
  TrainHooks hooks_;
  GeneratedTask task_;
  Rng rng_;
  DenseNet student_;
  Optimizer student_opt_;
  std::optional<TutorPolicy> tutor_;
  std::optional<Optimizer> actor_opt_;
  std::optional<Optimizer> critic_opt_;
  Registry registry_;
  int epoch_ = 0;
  int ppo_updates_ = 0;
  std::optional<double> bc_final_mse_;
  std::vector<EpochRow> rows_;
  std::vector<double> step_losses_;
  std::vector<double> last_epoch_weights_;
};

/// Full pipeline for one configuration. Identical configs (including seed)
/// produce identical artifacts.
RunArtifacts train(const RunConfig& config, const TrainHooks& hooks = {});

struct WriteOptions {
  bool dump_train_dataset = false;
};

std::string metrics_csv(const std::vector<EpochRow>& rows);

/// Writes metrics.csv, summary.json, the student checkpoint, the tutor
/// checkpoint (one file per network plus the log-std record) and the two
/// test-split CSVs under `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                         const RunArtifacts& artifacts, const WriteOptions& options = {});

/// Conventional per-run directory name: "<mode>-seed<seed>".
std::string run_dir_name(RunMode mode, std::uint64_t seed);

}  // namespace tsrl
