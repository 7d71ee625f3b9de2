#include "tsrl/reward.hpp"

#include <stdexcept>

namespace tsrl {

void RewardConfig::validate() const {
  if (!(c_rew > 0.0 && c_rew <= 1.0)) {
    throw std::invalid_argument("c_rew must be in (0,1]");
  }
}

double compute_reward(const SampleTransition& t, const RewardConfig& config) {
  config.validate();
  if (!(t.conf_init >= 0.0 && t.conf_init <= 1.0) ||
      !(t.conf_upd >= 0.0 && t.conf_upd <= 1.0)) {
    throw std::invalid_argument("confidence outside [0,1]");
  }
  if (!t.correct_init && t.correct_upd) return 1.0;
  if (t.correct_init && !t.correct_upd) return -1.0;
  const double delta = t.conf_upd - t.conf_init;
  const double r = t.correct_init ? config.c_rew * delta : -config.c_rew * delta;
  return r == 0.0 ? 0.0 : r;  // fold -0.0 into +0.0
}

}  // namespace tsrl
