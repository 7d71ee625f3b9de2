#include "tsrl/state.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "tsrl/csv.hpp"

namespace tsrl {

ForgetDefinition forget_definition_from_name(const std::string& name) {
  if (name == "correct_to_error") return ForgetDefinition::kCorrectToError;
  if (name == "error_to_correct") return ForgetDefinition::kErrorToCorrect;
  if (name == "any_flip") return ForgetDefinition::kAnyFlip;
  throw std::invalid_argument("unknown forget definition: " + name);
}

std::string forget_definition_name(ForgetDefinition d) {
  switch (d) {
    case ForgetDefinition::kCorrectToError:
      return "correct_to_error";
    case ForgetDefinition::kErrorToCorrect:
      return "error_to_correct";
    case ForgetDefinition::kAnyFlip:
      return "any_flip";
  }
  return "correct_to_error";
}

void StateConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0,1)");
  if (!(ema_norm_cap > 0.0)) throw std::invalid_argument("ema_norm_cap must be positive");
  if (!(hard_threshold > 0.0)) throw std::invalid_argument("hard_threshold must be positive");
}

std::vector<double> TutorState::to_vector() const {
  std::vector<double> v;
  v.reserve(feature.size() + 5);
  v.insert(v.end(), feature.begin(), feature.end());
  v.push_back(confidence);
  v.push_back(correct_onehot[0]);
  v.push_back(correct_onehot[1]);
  v.push_back(ema_loss_norm);
  v.push_back(forget_norm);
  return v;
}

Registry init_registry(int n_samples) {
  if (n_samples <= 0) throw std::invalid_argument("registry needs at least one sample");
  Registry registry(n_samples);
  for (int i = 0; i < n_samples; ++i) registry[i].id = i;
  return registry;
}

SampleRecord update_after_epoch(SampleRecord record, double epoch_loss, bool correct,
                                const StateConfig& config) {
  if (!(epoch_loss >= 0.0) || !std::isfinite(epoch_loss)) {
    throw std::invalid_argument("epoch loss must be finite and non-negative");
  }
  if (record.ema_initialized) {
    record.ema_loss = config.beta * record.ema_loss + (1.0 - config.beta) * epoch_loss;
  } else {
    record.ema_loss = epoch_loss;
    record.ema_initialized = true;
  }
  if (record.last_correct.has_value()) {
    const bool prev = *record.last_correct;
    bool forgot = false;
    switch (config.forget_definition) {
      case ForgetDefinition::kCorrectToError:
        forgot = prev && !correct;
        break;
      case ForgetDefinition::kErrorToCorrect:
        forgot = !prev && correct;
        break;
      case ForgetDefinition::kAnyFlip:
        forgot = prev != correct;
        break;
    }
    if (forgot) ++record.forget_count;
  }
  record.last_correct = correct;
  ++record.epochs_observed;
  return record;
}

TutorState build_state(const SampleRecord& record, const StudentOutput& output, int index,
                       int label, const StateConfig& config) {
  if (!record.ema_initialized) {
    throw std::invalid_argument("sample record has no observations yet");
  }
  if (index < 0 || index >= output.size()) {
    throw std::invalid_argument("sample index outside batch");
  }
  if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
  TutorState state;
  state.feature.assign(output.hidden.row(index).begin(), output.hidden.row(index).end());
  state.confidence = output.probabilities(index, label);
  const bool correct = output.predicted[index] == label;
  state.correct_onehot = correct ? std::array<double, 2>{1.0, 0.0}
                                 : std::array<double, 2>{0.0, 1.0};
  state.ema_loss_norm = std::min(record.ema_loss / config.ema_norm_cap, 1.0);
  state.forget_norm =
      static_cast<double>(record.forget_count) / std::max(record.epochs_observed, 1);
  state.forget_norm = std::min(state.forget_norm, 1.0);
  return state;
}

double hard_fraction(const Registry& registry, const StateConfig& config) {
  if (registry.empty()) return 0.0;
  int hard = 0;
  for (const auto& r : registry) {
    if (r.ema_initialized && r.ema_loss > config.hard_threshold) ++hard;
  }
  return static_cast<double>(hard) / static_cast<double>(registry.size());
}

void dump_registry_csv(const Registry& registry, std::ostream& os) {
  os << "sample_id,ema_loss,forget_count,epochs_observed,last_correct\n";
  for (const auto& r : registry) {
    os << r.id << ',' << (r.ema_initialized ? format_double(r.ema_loss) : std::string())
       << ',' << r.forget_count << ',' << r.epochs_observed << ',';
    if (r.last_correct.has_value()) os << (*r.last_correct ? "1" : "0");
    os << '\n';
  }
}

}  // namespace tsrl
