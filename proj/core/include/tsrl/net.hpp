#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tsrl/rng.hpp"

namespace tsrl {

/// Dense row-major matrix of doubles. Rows index samples (or output units),
/// columns index features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// View of one row.
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { kRelu, kTanh, kIdentity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  Matrix weight;             // out_dim x in_dim
  std::vector<double> bias;  // out_dim
  Activation activation = Activation::kIdentity;

  int in_dim() const { return weight.cols(); }
  int out_dim() const { return weight.rows(); }
};

/// Per-layer parameter gradients, same shapes as the network.
struct NetGradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  double squared_norm() const;
  bool finite() const;
};

/// Activations recorded by a forward pass; backward() consumes them.
/// post[0] is the input batch, post[l+1] = activation(pre[l]).
struct ForwardTrace {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;

  const Matrix& output() const { return post.back(); }
  /// Activation feeding the final layer (the input itself for a one-layer net).
  const Matrix& penultimate() const { return post[post.size() - 2]; }
};

/// Fully connected network. Layer dimensions chain (layer k's output feeds
/// layer k+1); construction and checkpoint loading validate this plus
/// finiteness of every parameter.
class DenseNet {
 public:
  DenseNet() = default;

  /// Glorot-uniform initialization: U(-s, s) with s = sqrt(6/(fan_in+fan_out)).
  /// Hidden layers use `hidden_activation`, the output layer is linear.
  static DenseNet make(int input_dim, const std::vector<int>& hidden_dims, int output_dim,
                       Activation hidden_activation, Rng& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const Layer& layer(int i) const { return layers_[i]; }
  Layer& layer(int i) { return layers_[i]; }

  /// inputs: batch x input_dim. Throws std::invalid_argument on a width
  /// mismatch. Pure: parameters are untouched and no randomness is consumed.
  ForwardTrace forward_trace(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs) const;

  /// Backpropagation. output_grad is dL/d(output), batch x output_dim.
  /// When input_grad is non-null it receives dL/d(input).
  NetGradients backward(const ForwardTrace& trace, const Matrix& output_grad,
                        Matrix* input_grad = nullptr) const;

  NetGradients zero_gradients() const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  static void flatten_gradients(const NetGradients& g, std::vector<double>& out);

  void save(std::ostream& os) const;
  static DenseNet load(std::istream& is);

 private:
  void validate() const;

  std::vector<Layer> layers_;
  int input_dim_ = 0;
  int output_dim_ = 0;
};

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind optimizer_kind_from_name(const std::string& name);
std::string optimizer_kind_name(OptimizerKind kind);

/// First-order optimizer over a flat parameter vector. Adam keeps
/// per-parameter moments; the step counter advances by exactly one per
/// apply().
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameter_count);

  void apply(std::span<double> params, std::span<const double> grads);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return learning_rate_; }
  long step_count() const { return step_; }

 private:
  OptimizerKind kind_ = OptimizerKind::kSgd;
  double learning_rate_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::vector<double> m_;
  std::vector<double> v_;
  long step_ = 0;
};

}  // namespace tsrl
