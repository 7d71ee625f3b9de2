#include "tsrl/task.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tsrl/csv.hpp"
#include "tsrl/rng.hpp"

namespace tsrl {

namespace {

// Hard samples keep at least this margin from the curve so none of them is
// literally on the boundary.
constexpr double kBandInnerMargin = 0.05;

double boundary(const TaskSpec& spec, double x1) {
  return spec.boundary_amplitude * std::sin(spec.boundary_frequency * x1);
}

int rule_label(const TaskSpec& spec, std::span<const double> x) {
  return x[0] > boundary(spec, x[1]) ? 1 : 0;
}

void fill_background(const TaskSpec& spec, Rng& rng, std::span<double> x) {
  for (std::size_t j = 1; j < x.size(); ++j) x[j] = rng.normal(0.0, spec.cluster_std);
}

}  // namespace

std::string difficulty_tag_name(DifficultyTag tag) {
  switch (tag) {
    case DifficultyTag::kEasy:
      return "easy";
    case DifficultyTag::kHard:
      return "hard";
    case DifficultyTag::kNoise:
      return "noise";
  }
  return "easy";
}

DifficultyTag difficulty_tag_from_name(const std::string& name) {
  if (name == "easy") return DifficultyTag::kEasy;
  if (name == "hard") return DifficultyTag::kHard;
  if (name == "noise") return DifficultyTag::kNoise;
  throw std::invalid_argument("unknown difficulty tag: " + name);
}

void TaskSpec::validate() const {
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("dataset sizes must be positive");
  if (input_dim < 2) throw std::invalid_argument("input_dim must be at least 2");
  if (easy_fraction < 0.0 || hard_fraction < 0.0 || noise_fraction < 0.0) {
    throw std::invalid_argument("difficulty fractions must be non-negative");
  }
  const double sum = easy_fraction + hard_fraction + noise_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("difficulty fractions must sum to 1");
  }
  if (easy_fraction + hard_fraction <= 0.0) {
    throw std::invalid_argument("task needs a non-noise component");
  }
  if (!(margin > 0.0) || !(band_width > kBandInnerMargin) || !(cluster_std > 0.0)) {
    throw std::invalid_argument("bad task geometry");
  }
  if (boundary_amplitude < 0.0) throw std::invalid_argument("boundary_amplitude must be non-negative");
  if (static_cast<int>(shift_translation.size()) > input_dim) {
    throw std::invalid_argument("shift translation has more entries than input dimensions");
  }
}

GeneratedTask generate_task(const TaskSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  GeneratedTask task;

  const int n_easy = static_cast<int>(std::lround(spec.easy_fraction * spec.n_train));
  const int n_hard = static_cast<int>(std::lround(spec.hard_fraction * spec.n_train));
  const int n_noise = spec.n_train - n_easy - n_hard;

  auto draw_easy = [&](std::span<double> x, int side) {
    fill_background(spec, rng, x);
    x[0] = (side == 1 ? 1.0 : -1.0) * spec.margin / 2.0 + rng.normal(0.0, spec.cluster_std);
  };
  auto draw_hard = [&](std::span<double> x, int side) {
    fill_background(spec, rng, x);
    const double offset = rng.uniform(kBandInnerMargin, spec.band_width);
    x[0] = boundary(spec, x[1]) + (side == 1 ? offset : -offset);
  };

  // Training split: easy, hard, then noise; shuffled afterwards so batches
  // mix the groups.
  Matrix inputs(spec.n_train, spec.input_dim);
  std::vector<int> labels(spec.n_train);
  std::vector<DifficultyTag> tags(spec.n_train);
  int row = 0;
  for (int i = 0; i < n_easy; ++i, ++row) {
    draw_easy(inputs.row(row), i % 2);
    labels[row] = rule_label(spec, inputs.row(row));
    tags[row] = DifficultyTag::kEasy;
  }
  for (int i = 0; i < n_hard; ++i, ++row) {
    draw_hard(inputs.row(row), i % 2);
    labels[row] = rule_label(spec, inputs.row(row));
    tags[row] = DifficultyTag::kHard;
  }
  for (int i = 0; i < n_noise; ++i, ++row) {
    draw_easy(inputs.row(row), i % 2);
    labels[row] = 1 - rule_label(spec, inputs.row(row));
    tags[row] = DifficultyTag::kNoise;
  }

  std::vector<int> order(spec.n_train);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  task.train.inputs = Matrix(spec.n_train, spec.input_dim);
  task.train.labels.resize(spec.n_train);
  task.train.tags.resize(spec.n_train);
  for (int i = 0; i < spec.n_train; ++i) {
    const int src = order[i];
    std::copy(inputs.row(src).begin(), inputs.row(src).end(), task.train.inputs.row(i).begin());
    task.train.labels[i] = labels[src];
    task.train.tags[i] = tags[src];
  }

  // Clean test split: easy and hard in their relative proportions, no
  // flipped labels.
  const double p_easy = spec.easy_fraction / (spec.easy_fraction + spec.hard_fraction);
  const int test_easy = static_cast<int>(std::lround(p_easy * spec.n_test));
  task.test_in.inputs = Matrix(spec.n_test, spec.input_dim);
  task.test_in.labels.resize(spec.n_test);
  for (int i = 0; i < spec.n_test; ++i) {
    auto x = task.test_in.inputs.row(i);
    if (i < test_easy) {
      draw_easy(x, i % 2);
    } else {
      draw_hard(x, i % 2);
    }
    task.test_in.labels[i] = rule_label(spec, x);
  }

  // Shifted split: rotate dimensions (0,1) and translate the clean split.
  const double c = std::cos(spec.shift_angle);
  const double s = std::sin(spec.shift_angle);
  std::vector<double> translation(spec.input_dim, 0.0);
  for (std::size_t j = 0; j < spec.shift_translation.size(); ++j) {
    translation[j] = spec.shift_translation[j];
  }
  task.test_shift.inputs = Matrix(spec.n_test, spec.input_dim);
  task.test_shift.labels = task.test_in.labels;
  for (int i = 0; i < spec.n_test; ++i) {
    const auto x = task.test_in.inputs.row(i);
    auto y = task.test_shift.inputs.row(i);
    std::copy(x.begin(), x.end(), y.begin());
    y[0] = c * x[0] - s * x[1];
    y[1] = s * x[0] + c * x[1];
    for (int j = 0; j < spec.input_dim; ++j) y[j] += translation[j];
  }
  return task;
}

void dump_dataset_csv(const LabeledDataset& dataset, std::ostream& os) {
  os << "id,label,tag";
  for (int j = 0; j < dataset.inputs.cols(); ++j) os << ",x" << j;
  os << "\n";
  for (int i = 0; i < dataset.size(); ++i) {
    os << i << ',' << dataset.labels[i] << ',';
    if (!dataset.tags.empty()) os << difficulty_tag_name(dataset.tags[i]);
    for (int j = 0; j < dataset.inputs.cols(); ++j) {
      os << ',' << format_double(dataset.inputs(i, j));
    }
    os << '\n';
  }
}

LabeledDataset load_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("empty dataset file");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "label" || header[2] != "tag") {
    throw std::invalid_argument("bad dataset header, expected id,label,tag,x0,...");
  }
  const int dim = static_cast<int>(header.size()) - 3;
  for (int j = 0; j < dim; ++j) {
    if (header[3 + j] != "x" + std::to_string(j)) {
      throw std::invalid_argument("bad dataset header feature columns");
    }
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("dataset row width does not match header");
    }
    rows.push_back(std::move(fields));
  }
  LabeledDataset dataset;
  dataset.inputs = Matrix(static_cast<int>(rows.size()), dim);
  dataset.labels.resize(rows.size());
  bool any_tag = false;
  std::vector<DifficultyTag> tags(rows.size(), DifficultyTag::kEasy);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = rows[i];
    const int label = std::stoi(f[1]);
    if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
    dataset.labels[i] = label;
    if (!f[2].empty()) {
      any_tag = true;
      tags[i] = difficulty_tag_from_name(f[2]);
    }
    for (int j = 0; j < dim; ++j) {
      dataset.inputs(static_cast<int>(i), j) = parse_double(f[3 + j]);
    }
  }
  if (any_tag) dataset.tags = std::move(tags);
  return dataset;
}

}  // namespace tsrl
