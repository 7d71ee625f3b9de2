#include "tsrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tsrl {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& known, const std::string& scope) {
  if (!j.is_object()) throw std::invalid_argument("config section '" + scope + "' must be an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("unknown config key '" + scope + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void parse_student(const json& j, StudentConfig& c) {
  check_keys(j, {"hidden_dims", "optimizer", "learning_rate"}, "student");
  read(j, "hidden_dims", c.hidden_dims);
  if (j.contains("optimizer")) c.optimizer = optimizer_kind_from_name(j.at("optimizer"));
  read(j, "learning_rate", c.learning_rate);
}

void parse_tutor_net(const json& j, TutorNetConfig& c) {
  check_keys(j, {"hidden_dims", "log_std_init"}, "tutor_net");
  read(j, "hidden_dims", c.hidden_dims);
  read(j, "log_std_init", c.log_std_init);
}

void parse_state(const json& j, StateConfig& c) {
  check_keys(j, {"beta", "ema_norm_cap", "hard_threshold", "forget_definition"}, "state");
  read(j, "beta", c.beta);
  read(j, "ema_norm_cap", c.ema_norm_cap);
  read(j, "hard_threshold", c.hard_threshold);
  if (j.contains("forget_definition")) {
    c.forget_definition = forget_definition_from_name(j.at("forget_definition"));
  }
}

void parse_ppo(const json& j, PPOConfig& c) {
  check_keys(j,
             {"clip_eps", "actor_lr", "critic_lr", "ppo_epochs", "minibatch_size",
              "entropy_coef", "value_coef", "advantage_norm", "optimizer"},
             "ppo");
  read(j, "clip_eps", c.clip_eps);
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "ppo_epochs", c.ppo_epochs);
  read(j, "minibatch_size", c.minibatch_size);
  read(j, "entropy_coef", c.entropy_coef);
  read(j, "value_coef", c.value_coef);
  read(j, "advantage_norm", c.advantage_norm);
  if (j.contains("optimizer")) c.optimizer = optimizer_kind_from_name(j.at("optimizer"));
}

void parse_reward(const json& j, RewardConfig& c) {
  check_keys(j, {"c_rew"}, "reward");
  read(j, "c_rew", c.c_rew);
}

void parse_expert(const json& j, ExpertConfig& c) {
  check_keys(j, {"loss_peak", "loss_width", "min_weight"}, "expert");
  read(j, "loss_peak", c.loss_peak);
  read(j, "loss_width", c.loss_width);
  read(j, "min_weight", c.min_weight);
}

void parse_bc(const json& j, BCConfig& c) {
  check_keys(j, {"learning_rate", "epochs", "minibatch_size", "holdout_fraction"}, "bc");
  read(j, "learning_rate", c.learning_rate);
  read(j, "epochs", c.epochs);
  read(j, "minibatch_size", c.minibatch_size);
  read(j, "holdout_fraction", c.holdout_fraction);
}

void parse_task(const json& j, TaskSpec& c) {
  check_keys(j,
             {"n_train", "n_test", "input_dim", "easy_fraction", "hard_fraction",
              "noise_fraction", "margin", "band_width", "boundary_amplitude",
              "boundary_frequency", "cluster_std", "shift_angle", "shift_translation", "seed"},
             "task");
  read(j, "n_train", c.n_train);
  read(j, "n_test", c.n_test);
  read(j, "input_dim", c.input_dim);
  read(j, "easy_fraction", c.easy_fraction);
  read(j, "hard_fraction", c.hard_fraction);
  read(j, "noise_fraction", c.noise_fraction);
  read(j, "margin", c.margin);
  read(j, "band_width", c.band_width);
  read(j, "boundary_amplitude", c.boundary_amplitude);
  read(j, "boundary_frequency", c.boundary_frequency);
  read(j, "cluster_std", c.cluster_std);
  read(j, "shift_angle", c.shift_angle);
  read(j, "shift_translation", c.shift_translation);
  read(j, "seed", c.seed);
}

RunConfig parse_config_json(const json& j) {
  check_keys(j,
             {"mode", "seed", "n_warmup_epochs", "n_total_epochs", "batch_size",
              "derive_task_seed", "constant_tutor_weight", "student", "tutor_net", "state",
              "ppo", "reward", "expert", "bc", "task"},
             "<root>");
  RunConfig c;
  if (j.contains("mode")) c.mode = run_mode_from_name(j.at("mode"));
  read(j, "seed", c.seed);
  read(j, "n_warmup_epochs", c.n_warmup_epochs);
  read(j, "n_total_epochs", c.n_total_epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "derive_task_seed", c.derive_task_seed);
  if (j.contains("constant_tutor_weight") && !j.at("constant_tutor_weight").is_null()) {
    c.constant_tutor_weight = j.at("constant_tutor_weight").get<double>();
  }
  if (j.contains("student")) parse_student(j.at("student"), c.student);
  if (j.contains("tutor_net")) parse_tutor_net(j.at("tutor_net"), c.tutor_net);
  if (j.contains("state")) parse_state(j.at("state"), c.state);
  if (j.contains("ppo")) parse_ppo(j.at("ppo"), c.ppo);
  if (j.contains("reward")) parse_reward(j.at("reward"), c.reward);
  if (j.contains("expert")) parse_expert(j.at("expert"), c.expert);
  if (j.contains("bc")) parse_bc(j.at("bc"), c.bc);
  if (j.contains("task")) parse_task(j.at("task"), c.task);
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  try {
    return parse_config_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::invalid_argument("cannot read config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_run_config(buffer.str());
}

std::string run_config_to_json_string(const RunConfig& c) {
  json j;
  j["mode"] = run_mode_name(c.mode);
  j["seed"] = c.seed;
  j["n_warmup_epochs"] = c.n_warmup_epochs;
  j["n_total_epochs"] = c.n_total_epochs;
  j["batch_size"] = c.batch_size;
  j["derive_task_seed"] = c.derive_task_seed;
  if (c.constant_tutor_weight) {
    j["constant_tutor_weight"] = *c.constant_tutor_weight;
  } else {
    j["constant_tutor_weight"] = nullptr;
  }
  j["student"] = {
      {"hidden_dims", c.student.hidden_dims},
      {"optimizer", optimizer_kind_name(c.student.optimizer)},
      {"learning_rate", c.student.learning_rate},
  };
  j["tutor_net"] = {
      {"hidden_dims", c.tutor_net.hidden_dims},
      {"log_std_init", c.tutor_net.log_std_init},
  };
  j["state"] = {
      {"beta", c.state.beta},
      {"ema_norm_cap", c.state.ema_norm_cap},
      {"hard_threshold", c.state.hard_threshold},
      {"forget_definition", forget_definition_name(c.state.forget_definition)},
  };
  j["ppo"] = {
      {"clip_eps", c.ppo.clip_eps},
      {"actor_lr", c.ppo.actor_lr},
      {"critic_lr", c.ppo.critic_lr},
      {"ppo_epochs", c.ppo.ppo_epochs},
      {"minibatch_size", c.ppo.minibatch_size},
      {"entropy_coef", c.ppo.entropy_coef},
      {"value_coef", c.ppo.value_coef},
      {"advantage_norm", c.ppo.advantage_norm},
      {"optimizer", optimizer_kind_name(c.ppo.optimizer)},
  };
  j["reward"] = {{"c_rew", c.reward.c_rew}};
  j["expert"] = {
      {"loss_peak", c.expert.loss_peak},
      {"loss_width", c.expert.loss_width},
      {"min_weight", c.expert.min_weight},
  };
  j["bc"] = {
      {"learning_rate", c.bc.learning_rate},
      {"epochs", c.bc.epochs},
      {"minibatch_size", c.bc.minibatch_size},
      {"holdout_fraction", c.bc.holdout_fraction},
  };
  j["task"] = {
      {"n_train", c.task.n_train},
      {"n_test", c.task.n_test},
      {"input_dim", c.task.input_dim},
      {"easy_fraction", c.task.easy_fraction},
      {"hard_fraction", c.task.hard_fraction},
      {"noise_fraction", c.task.noise_fraction},
      {"margin", c.task.margin},
      {"band_width", c.task.band_width},
      {"boundary_amplitude", c.task.boundary_amplitude},
      {"boundary_frequency", c.task.boundary_frequency},
      {"cluster_std", c.task.cluster_std},
      {"shift_angle", c.task.shift_angle},
      {"shift_translation", c.task.shift_translation},
      {"seed", c.task.seed},
  };
  return j.dump(2);
}

}  // namespace tsrl
