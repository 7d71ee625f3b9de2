#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsrl/student.hpp"

namespace tsrl {

/// Longitudinal learning history of one training sample, folded in once per
/// epoch. The EMA starts at the first observed loss (there is no epoch-zero
/// value to decay from), so it always stays inside the convex hull of the
/// losses seen so far.
struct SampleRecord {
  int id = 0;
  double ema_loss = 0.0;
  bool ema_initialized = false;
  int forget_count = 0;
  std::optional<bool> last_correct;
  int epochs_observed = 0;
};

/// Which epoch-to-epoch correctness flip counts as a forgetting event.
/// kCorrectToError is the classical definition and the default.
enum class ForgetDefinition { kCorrectToError, kErrorToCorrect, kAnyFlip };

ForgetDefinition forget_definition_from_name(const std::string& name);
std::string forget_definition_name(ForgetDefinition d);

struct StateConfig {
  double beta = 0.9;            // EMA smoothing factor, in (0,1)
  double ema_norm_cap = 3.5;    // raw EMA at or above this maps to 1.0
  double hard_threshold = 0.7;  // raw EMA above this counts a sample as hard
  ForgetDefinition forget_definition = ForgetDefinition::kCorrectToError;

  void validate() const;
};

/// Observation vector handed to the tutor: [feature, confidence,
/// correct_onehot, ema_loss_norm, forget_norm], total dimension H + 5.
/// correct_onehot is [1,0] for a correct prediction and [0,1] otherwise.
struct TutorState {
  std::vector<double> feature;
  double confidence = 0.0;
  std::array<double, 2> correct_onehot{0.0, 0.0};
  double ema_loss_norm = 0.0;
  double forget_norm = 0.0;

  int dimension() const { return static_cast<int>(feature.size()) + 5; }
  std::vector<double> to_vector() const;
};

using Registry = std::vector<SampleRecord>;

/// Fresh records with ids 0..n-1, nothing observed yet.
Registry init_registry(int n_samples);

/// Folds one epoch's loss and correctness into a record. First observation
/// sets the EMA directly; afterwards ema <- beta*ema + (1-beta)*loss.
SampleRecord update_after_epoch(SampleRecord record, double epoch_loss, bool correct,
                                const StateConfig& config);

/// Assembles the tutor observation for sample `index` of a forwarded batch.
/// Requires the record to have been observed at least once.
TutorState build_state(const SampleRecord& record, const StudentOutput& output, int index,
                       int label, const StateConfig& config);

/// Fraction of observed records whose raw EMA loss exceeds the hard
/// threshold. Unobserved records count as not hard.
double hard_fraction(const Registry& registry, const StateConfig& config);

/// CSV dump: sample_id,ema_loss,forget_count,epochs_observed,last_correct.
void dump_registry_csv(const Registry& registry, std::ostream& os);

}  // namespace tsrl
