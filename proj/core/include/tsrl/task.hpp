#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsrl/net.hpp"

namespace tsrl {

/// Generator ground truth for one training sample. Never fed to the
/// student or the tutor; the analysis layer uses it to ask questions like
/// "what weight did hopeless samples get".
enum class DifficultyTag { kEasy, kHard, kNoise };

std::string difficulty_tag_name(DifficultyTag tag);
DifficultyTag difficulty_tag_from_name(const std::string& name);

/// Synthetic two-class task with planted difficulty structure. The class
/// boundary along dimension 0 is a sine curve in dimension 1:
///   label = 1  iff  x0 > amplitude * sin(frequency * x1).
/// Easy samples sit in cluster cores at +-margin/2 on dimension 0, hard
/// samples inside a narrow band around the curve (consistently labeled, so
/// learnable with enough capacity), and noise samples are easy-region
/// points with flipped labels (hopeless). The shifted test split applies a
/// rotation in dimensions (0,1) plus a translation to the clean test split.
struct TaskSpec {
  int n_train = 2000;
  int n_test = 1000;
  int input_dim = 8;
  double easy_fraction = 0.65;
  double hard_fraction = 0.25;
  double noise_fraction = 0.10;
  double margin = 6.0;               // distance between the two easy cluster centres
  double band_width = 0.5;           // hard samples land within this distance of the curve
  double boundary_amplitude = 1.0;
  double boundary_frequency = 2.0;
  double cluster_std = 0.6;
  double shift_angle = 0.4363323129985824;  // 25 degrees
  std::vector<double> shift_translation = {0.5, 0.5};  // padded with zeros
  std::uint64_t seed = 1234;

  void validate() const;
};

struct LabeledDataset {
  Matrix inputs;                    // n x input_dim
  std::vector<int> labels;          // {0,1}
  std::vector<DifficultyTag> tags;  // training split only; empty otherwise

  int size() const { return inputs.rows(); }
};

struct GeneratedTask {
  LabeledDataset train;
  LabeledDataset test_in;
  LabeledDataset test_shift;
};

/// Deterministic in the spec (same spec -> identical datasets, including the
/// seed field). With a zero shift the shifted split equals the clean one.
GeneratedTask generate_task(const TaskSpec& spec);

/// CSV schema: id,label,tag,x0..x{d-1} with a mandatory header. The tag
/// field is empty for untagged datasets.
void dump_dataset_csv(const LabeledDataset& dataset, std::ostream& os);
LabeledDataset load_dataset_csv(std::istream& is);

}  // namespace tsrl
