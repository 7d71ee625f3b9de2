#include "tsrl/student.hpp"

#include <cmath>
#include <stdexcept>

namespace tsrl {

namespace {

/// Softmax + cross entropy from logits via log-sum-exp.
double log_sum_exp2(double a, double b) {
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

StudentOutput output_from_trace(const DenseNet& net, ForwardTrace&& trace) {
  if (net.output_dim() != 2) {
    throw std::invalid_argument("student head must have exactly 2 classes");
  }
  StudentOutput out;
  out.logits = trace.output();
  out.hidden = trace.penultimate();
  const int n = out.logits.rows();
  out.probabilities = Matrix(n, 2);
  out.predicted.resize(n);
  for (int i = 0; i < n; ++i) {
    const double z0 = out.logits(i, 0);
    const double z1 = out.logits(i, 1);
    const double lse = log_sum_exp2(z0, z1);
    out.probabilities(i, 0) = std::exp(z0 - lse);
    out.probabilities(i, 1) = std::exp(z1 - lse);
    out.predicted[i] = z1 > z0 ? 1 : 0;
  }
  return out;
}

void check_labels(int n, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("label count does not match batch size");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

}  // namespace

StudentOutput student_forward(const DenseNet& net, const Matrix& inputs) {
  return output_from_trace(net, net.forward_trace(inputs));
}

StudentOutput student_forward(const DenseNet& net, const Matrix& inputs,
                              const std::vector<int>& labels) {
  StudentOutput out = student_forward(net, inputs);
  check_labels(out.size(), labels);
  out.confidence.resize(out.size());
  out.correct.resize(out.size());
  for (int i = 0; i < out.size(); ++i) {
    out.confidence[i] = out.probabilities(i, labels[i]);
    out.correct[i] = out.predicted[i] == labels[i];
  }
  return out;
}

WeightedLoss weighted_ce_loss(const StudentOutput& output, const std::vector<int>& labels,
                              const std::vector<double>& weights) {
  const int n = output.size();
  check_labels(n, labels);
  if (static_cast<int>(weights.size()) != n) {
    throw std::invalid_argument("weight count does not match batch size");
  }
  WeightedLoss loss;
  loss.per_sample.resize(n);
  loss.unweighted.resize(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("weight outside [0,1]");
    }
    const double lse = log_sum_exp2(output.logits(i, 0), output.logits(i, 1));
    const double ce = lse - output.logits(i, labels[i]);
    loss.unweighted[i] = ce;
    loss.per_sample[i] = w * ce;
    sum += loss.per_sample[i];
  }
  loss.total = n > 0 ? sum / n : 0.0;
  return loss;
}

StepReport train_step(DenseNet& net, Optimizer& optimizer, const Matrix& batch,
                      const std::vector<int>& labels, const std::vector<double>& weights) {
  ForwardTrace trace = net.forward_trace(batch);
  StudentOutput out = output_from_trace(net, ForwardTrace(trace));
  const WeightedLoss loss = weighted_ce_loss(out, labels, weights);

  // d(total)/d(logit) = w_i * (p_i - onehot(y_i)) / n
  const int n = out.size();
  Matrix output_grad(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double target = c == labels[i] ? 1.0 : 0.0;
      output_grad(i, c) = weights[i] * (out.probabilities(i, c) - target) / n;
    }
  }
  const NetGradients grads = net.backward(trace, output_grad);
  if (!grads.finite()) {
    throw std::runtime_error("non-finite gradient in student update");
  }

  StepReport report;
  report.loss_before = loss.total;
  report.grad_norm = std::sqrt(grads.squared_norm());
  if (report.grad_norm > 0.0) {
    std::vector<double> params = net.parameters();
    std::vector<double> flat;
    DenseNet::flatten_gradients(grads, flat);
    optimizer.apply(params, flat);
    net.set_parameters(params);
    report.applied = true;
  }
  return report;
}

double EvalSnapshot::mean_loss() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : samples) s += e.ce_loss;
  return s / static_cast<double>(samples.size());
}

double EvalSnapshot::accuracy() const {
  if (samples.empty()) return 0.0;
  int c = 0;
  for (const auto& e : samples) c += e.correct ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(samples.size());
}

EvalSnapshot evaluate(const DenseNet& net, const Matrix& inputs, const std::vector<int>& labels) {
  const StudentOutput out = student_forward(net, inputs, labels);
  EvalSnapshot snap;
  snap.samples.resize(out.size());
  for (int i = 0; i < out.size(); ++i) {
    snap.samples[i].correct = out.correct[i];
    snap.samples[i].confidence = out.confidence[i];
    const double lse = log_sum_exp2(out.logits(i, 0), out.logits(i, 1));
    snap.samples[i].ce_loss = lse - out.logits(i, labels[i]);
  }
  return snap;
}

}  // namespace tsrl
