#include "tsrl/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "tsrl/config.hpp"
#include "tsrl/csv.hpp"
#include "tsrl/metrics.hpp"

namespace tsrl {

namespace {

using nlohmann::json;

SplitMetrics split_metrics(const DenseNet& net, const LabeledDataset& data) {
  const StudentOutput out = student_forward(net, data.inputs);
  std::vector<double> scores(data.size());
  for (int i = 0; i < data.size(); ++i) scores[i] = out.probabilities(i, 1);
  SplitMetrics m;
  m.auc = auc(scores, data.labels);
  m.acc = accuracy(scores, data.labels);
  m.eer = eer(scores, data.labels);
  return m;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

GeneratedTask make_task_checked(const RunConfig& config) {
  config.validate();
  return generate_task(config.effective_task());
}

}  // namespace

RunMode run_mode_from_name(const std::string& name) {
  if (name == "baseline") return RunMode::kBaseline;
  if (name == "cl") return RunMode::kCl;
  if (name == "tsrl") return RunMode::kTsrl;
  throw std::invalid_argument("unknown mode: " + name);
}

std::string run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kBaseline:
      return "baseline";
    case RunMode::kCl:
      return "cl";
    case RunMode::kTsrl:
      return "tsrl";
  }
  return "baseline";
}

void StudentConfig::validate() const {
  if (hidden_dims.empty()) throw std::invalid_argument("student needs at least one hidden layer");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("student hidden widths must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("student learning rate must be positive");
}

void TutorNetConfig::validate() const {
  if (hidden_dims.empty()) throw std::invalid_argument("tutor needs at least one hidden layer");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("tutor hidden widths must be positive");
  }
  if (!std::isfinite(log_std_init)) throw std::invalid_argument("log_std_init must be finite");
}

void RunConfig::validate() const {
  if (n_warmup_epochs < 1) throw std::invalid_argument("n_warmup_epochs must be at least 1");
  if (n_warmup_epochs >= n_total_epochs) {
    throw std::invalid_argument("n_warmup_epochs must be smaller than n_total_epochs");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (constant_tutor_weight &&
      !(*constant_tutor_weight >= 0.0 && *constant_tutor_weight <= 1.0)) {
    throw std::invalid_argument("constant_tutor_weight must be in [0,1]");
  }
  student.validate();
  tutor_net.validate();
  state.validate();
  ppo.validate();
  reward.validate();
  expert.validate();
  bc.validate();
  task.validate();
}

TaskSpec RunConfig::effective_task() const {
  TaskSpec spec = task;
  if (derive_task_seed) spec.seed = mix_seeds(task.seed, seed);
  return spec;
}

Trainer::Trainer(const RunConfig& config, TrainHooks hooks)
    : config_(config),
      hooks_(std::move(hooks)),
      task_(make_task_checked(config)),
      rng_(config.seed),
      student_(DenseNet::make(config.task.input_dim, config.student.hidden_dims, 2,
                              Activation::kRelu, rng_)),
      student_opt_(config.student.optimizer, config.student.learning_rate,
                   student_.parameter_count()),
      registry_(init_registry(config.task.n_train)) {
  last_epoch_weights_.assign(task_.train.size(), 1.0);
}

void Trainer::ensure_tutor() {
  if (tutor_) return;
  const int state_dim = static_cast<int>(config_.student.hidden_dims.back()) + 5;
  tutor_ = TutorPolicy::make(state_dim, config_.tutor_net.hidden_dims,
                             config_.tutor_net.log_std_init, rng_);
  actor_opt_.emplace(config_.ppo.optimizer, config_.ppo.actor_lr,
                     tutor_->actor_parameter_count());
  critic_opt_.emplace(config_.ppo.optimizer, config_.ppo.critic_lr,
                      tutor_->critic.parameter_count());
}

Matrix Trainer::gather_inputs(const std::vector<int>& ids) const {
  Matrix m(static_cast<int>(ids.size()), task_.train.inputs.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = task_.train.inputs.row(ids[r]);
    std::copy(src.begin(), src.end(), m.row(static_cast<int>(r)).begin());
  }
  return m;
}

std::vector<int> Trainer::gather_labels(const std::vector<int>& ids) const {
  std::vector<int> labels(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) labels[r] = task_.train.labels[ids[r]];
  return labels;
}

EpochRow Trainer::run_epoch(WeightSource source, RolloutBuffer* buffer) {
  const int n = task_.train.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order);

  std::vector<double> epoch_ce(n, 0.0);
  std::vector<char> epoch_correct(n, 0);
  std::vector<double> weights_by_id(n, 1.0);
  std::vector<double> rewards;
  const bool compute_rewards = source == WeightSource::kSampledPolicy ||
                               source == WeightSource::kConstant;
  const bool collect = source == WeightSource::kSampledPolicy && buffer != nullptr;

  for (int start = 0; start < n; start += config_.batch_size) {
    const int m = std::min(config_.batch_size, n - start);
    const std::vector<int> ids(order.begin() + start, order.begin() + start + m);
    const Matrix inputs = gather_inputs(ids);
    const std::vector<int> labels = gather_labels(ids);

    // Pre-update snapshot: feeds the tutor states, the registry statistics
    // and one side of the reward transition.
    const StudentOutput pre = student_forward(student_, inputs, labels);
    const std::vector<double> ones(m, 1.0);
    const WeightedLoss pre_loss = weighted_ce_loss(pre, labels, ones);
    for (int i = 0; i < m; ++i) {
      epoch_ce[ids[i]] = pre_loss.unweighted[i];
      epoch_correct[ids[i]] = pre.correct[i] ? 1 : 0;
    }

    std::vector<double> weights(m, 1.0);
    std::vector<TutorState> states;
    std::vector<ActionSample> actions;
    switch (source) {
      case WeightSource::kUniform:
        break;
      case WeightSource::kConstant:
        std::fill(weights.begin(), weights.end(), *config_.constant_tutor_weight);
        break;
      case WeightSource::kFrozenPolicy:
      case WeightSource::kSampledPolicy: {
        ensure_tutor();
        states.reserve(m);
        for (int i = 0; i < m; ++i) {
          states.push_back(build_state(registry_[ids[i]], pre, i, labels[i], config_.state));
        }
        if (source == WeightSource::kFrozenPolicy) {
          for (int i = 0; i < m; ++i) weights[i] = mean_action(*tutor_, states[i]);
        } else {
          actions.reserve(m);
          for (int i = 0; i < m; ++i) {
            actions.push_back(sample_action(*tutor_, states[i], rng_));
            weights[i] = actions[i].weight;
          }
        }
        break;
      }
    }
    for (int i = 0; i < m; ++i) weights_by_id[ids[i]] = weights[i];

    const StepReport report = train_step(student_, student_opt_, inputs, labels, weights);
    step_losses_.push_back(report.loss_before);

    if (compute_rewards) {
      // Post-update snapshot: the other side of the reward transition.
      const EvalSnapshot post = evaluate(student_, inputs, labels);
      for (int i = 0; i < m; ++i) {
        SampleTransition t;
        t.correct_init = pre.correct[i];
        t.conf_init = pre.confidence[i];
        t.correct_upd = post.samples[i].correct;
        t.conf_upd = post.samples[i].confidence;
        const double r = compute_reward(t, config_.reward);
        rewards.push_back(r);
        if (collect) {
          buffer->push_back(Experience{states[i], actions[i], r, true});
        }
      }
    }
  }

  // Epoch close-out: fold this epoch's observations into the registry, then
  // (for the learning mode) run PPO on the collected buffer.
  for (int id = 0; id < n; ++id) {
    registry_[id] =
        update_after_epoch(registry_[id], epoch_ce[id], epoch_correct[id] != 0, config_.state);
  }

  double clip_fraction = 0.0;
  if (collect && !buffer->empty()) {
    const PPOReport ppo =
        ppo_update(*tutor_, *buffer, config_.ppo, *actor_opt_, *critic_opt_, rng_);
    ++ppo_updates_;
    clip_fraction = ppo.clip_fraction;
  }

  ++epoch_;
  EpochRow row;
  row.epoch = epoch_;
  row.train_loss = mean_of(epoch_ce);
  const SplitMetrics in = split_metrics(student_, task_.test_in);
  const SplitMetrics shift = split_metrics(student_, task_.test_shift);
  row.auc_in = in.auc;
  row.acc_in = in.acc;
  row.eer_in = in.eer;
  row.auc_shift = shift.auc;
  row.acc_shift = shift.acc;
  row.eer_shift = shift.eer;
  row.hard_fraction = hard_fraction(registry_, config_.state);
  row.mean_weight = mean_of(weights_by_id);
  row.mean_reward = mean_of(rewards);
  row.clip_fraction = clip_fraction;
  rows_.push_back(row);
  last_epoch_weights_ = weights_by_id;
  if (hooks_.after_epoch) hooks_.after_epoch(epoch_, registry_);
  return row;
}

std::vector<TutorState> Trainer::run_warmup() {
  if (epoch_ != 0) throw std::logic_error("warmup must run on a fresh trainer");
  for (int e = 0; e < config_.n_warmup_epochs; ++e) {
    run_epoch(WeightSource::kUniform, nullptr);
  }
  if (config_.mode == RunMode::kBaseline) return {};

  // Harvest states for cloning from a full pure pass over the training set;
  // every record now has at least one observation.
  const StudentOutput out =
      student_forward(student_, task_.train.inputs, task_.train.labels);
  std::vector<TutorState> states;
  states.reserve(task_.train.size());
  for (int id = 0; id < task_.train.size(); ++id) {
    states.push_back(
        build_state(registry_[id], out, id, task_.train.labels[id], config_.state));
  }
  return states;
}

BCReport Trainer::run_bc(const std::vector<TutorState>& states) {
  ensure_tutor();
  const std::vector<double> targets = expert_weights(states, config_.expert);
  const BCReport report = bc_pretrain(*tutor_, states, targets, config_.bc, rng_);
  bc_final_mse_ = report.final_mse;
  return report;
}

Trainer::TsrlEpochResult Trainer::run_tsrl_epoch() {
  if (epoch_ < config_.n_warmup_epochs) {
    throw std::logic_error("tutor epochs cannot start before warmup completes");
  }
  TsrlEpochResult result;
  WeightSource source = WeightSource::kSampledPolicy;
  if (config_.constant_tutor_weight) {
    source = WeightSource::kConstant;
  } else if (config_.mode == RunMode::kCl) {
    source = WeightSource::kFrozenPolicy;
  }
  result.row = run_epoch(source, &result.buffer);
  return result;
}

EpochRow Trainer::run_uniform_epoch() {
  return run_epoch(WeightSource::kUniform, nullptr);
}

RunArtifacts Trainer::finish() {
  if (rows_.empty()) throw std::logic_error("no epochs were run");
  RunArtifacts artifacts;
  artifacts.rows = rows_;
  artifacts.step_losses = step_losses_;
  artifacts.final_epoch_weights = last_epoch_weights_;
  artifacts.student = student_;
  if (tutor_) artifacts.tutor = tutor_;
  artifacts.task = task_;

  RunSummary& s = artifacts.summary;
  s.mode = config_.mode;
  s.seed = config_.seed;
  s.warmup_first = 1;
  s.warmup_last = config_.n_warmup_epochs;
  s.tsrl_first = config_.n_warmup_epochs + 1;
  s.tsrl_last = config_.n_total_epochs;
  s.ppo_updates = ppo_updates_;
  s.bc_final_mse = bc_final_mse_;
  const EpochRow& last = rows_.back();
  s.final_in = {last.auc_in, last.acc_in, last.eer_in};
  s.final_shift = {last.auc_shift, last.acc_shift, last.eer_shift};
  s.final_train_loss = last.train_loss;
  s.final_hard_fraction = last.hard_fraction;

  double sums[3] = {0.0, 0.0, 0.0};
  int counts[3] = {0, 0, 0};
  for (int id = 0; id < task_.train.size(); ++id) {
    const int t = static_cast<int>(task_.train.tags[id]);
    sums[t] += last_epoch_weights_[id];
    ++counts[t];
  }
  s.final_weight_by_tag.easy = counts[0] ? sums[0] / counts[0] : 0.0;
  s.final_weight_by_tag.hard = counts[1] ? sums[1] / counts[1] : 0.0;
  s.final_weight_by_tag.noise = counts[2] ? sums[2] / counts[2] : 0.0;
  return artifacts;
}

RunArtifacts train(const RunConfig& config, const TrainHooks& hooks) {
  config.validate();
  Trainer trainer(config, hooks);
  const std::vector<TutorState> states = trainer.run_warmup();
  if (config.mode != RunMode::kBaseline && !config.constant_tutor_weight) {
    trainer.run_bc(states);
  }
  for (int e = config.n_warmup_epochs; e < config.n_total_epochs; ++e) {
    if (config.mode == RunMode::kBaseline) {
      trainer.run_uniform_epoch();
    } else {
      trainer.run_tsrl_epoch();
    }
  }
  return trainer.finish();
}

std::string metrics_csv(const std::vector<EpochRow>& rows) {
  std::ostringstream os;
  os << "epoch,train_loss,auc_in,acc_in,eer_in,auc_shift,acc_shift,eer_shift,"
        "hard_fraction,mean_weight,mean_reward,clip_fraction\n";
  for (const auto& r : rows) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.auc_in)
       << ',' << format_double(r.acc_in) << ',' << format_double(r.eer_in) << ','
       << format_double(r.auc_shift) << ',' << format_double(r.acc_shift) << ','
       << format_double(r.eer_shift) << ',' << format_double(r.hard_fraction) << ','
       << format_double(r.mean_weight) << ',' << format_double(r.mean_reward) << ','
       << format_double(r.clip_fraction) << '\n';
  }
  return os.str();
}

std::string run_dir_name(RunMode mode, std::uint64_t seed) {
  return run_mode_name(mode) + "-seed" + std::to_string(seed);
}

void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                         const RunArtifacts& artifacts, const WriteOptions& options) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "metrics.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write metrics.csv");
    os << metrics_csv(artifacts.rows);
  }
  {
    const RunSummary& s = artifacts.summary;
    json j;
    j["mode"] = run_mode_name(s.mode);
    j["seed"] = s.seed;
    j["phases"] = {
        {"warmup", {s.warmup_first, s.warmup_last}},
        {"bc_after_epoch", s.warmup_last},
        {"tsrl", {s.tsrl_first, s.tsrl_last}},
    };
    j["ppo_updates"] = s.ppo_updates;
    if (s.bc_final_mse) {
      j["bc_final_mse"] = *s.bc_final_mse;
    } else {
      j["bc_final_mse"] = nullptr;
    }
    j["final"] = {
        {"in", {{"auc", s.final_in.auc}, {"acc", s.final_in.acc}, {"eer", s.final_in.eer}}},
        {"shifted",
         {{"auc", s.final_shift.auc}, {"acc", s.final_shift.acc}, {"eer", s.final_shift.eer}}},
        {"train_loss", s.final_train_loss},
        {"hard_fraction", s.final_hard_fraction},
    };
    j["final_epoch_mean_weight_by_tag"] = {
        {"easy", s.final_weight_by_tag.easy},
        {"hard", s.final_weight_by_tag.hard},
        {"noise", s.final_weight_by_tag.noise},
    };
    j["config"] = json::parse(run_config_to_json_string(config));
    std::ofstream os(dir / "summary.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write summary.json");
    os << j.dump(2) << "\n";
  }
  {
    std::ofstream os(dir / "student.net", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write student.net");
    artifacts.student.save(os);
  }
  if (artifacts.tutor) {
    std::ofstream actor(dir / "tutor_actor.net", std::ios::binary);
    artifacts.tutor->actor.save(actor);
    std::ofstream critic(dir / "tutor_critic.net", std::ios::binary);
    artifacts.tutor->critic.save(critic);
    std::ofstream log_std(dir / "tutor_logstd.txt", std::ios::binary);
    log_std << format_double(artifacts.tutor->log_std) << "\n";
  }
  {
    std::ofstream os(dir / "test_in.csv", std::ios::binary);
    dump_dataset_csv(artifacts.task.test_in, os);
  }
  {
    std::ofstream os(dir / "test_shift.csv", std::ios::binary);
    dump_dataset_csv(artifacts.task.test_shift, os);
  }
  if (options.dump_train_dataset) {
    std::ofstream os(dir / "train.csv", std::ios::binary);
    dump_dataset_csv(artifacts.task.train, os);
  }
}

}  // namespace tsrl
