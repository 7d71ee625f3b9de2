#include "tsrl/net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tsrl/csv.hpp"

namespace tsrl {

namespace {

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kIdentity:
      return x;
  }
  return x;
}

/// Derivative expressed from the pre-activation value.
double activation_grad(Activation a, double pre) {
  switch (a) {
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation: " + name);
}

double NetGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weight) {
    for (double x : w.data()) s += x * x;
  }
  for (const auto& b : bias) {
    for (double x : b) s += x * x;
  }
  return s;
}

bool NetGradients::finite() const {
  for (const auto& w : weight) {
    for (double x : w.data()) {
      if (!std::isfinite(x)) return false;
    }
  }
  for (const auto& b : bias) {
    for (double x : b) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

DenseNet DenseNet::make(int input_dim, const std::vector<int>& hidden_dims, int output_dim,
                        Activation hidden_activation, Rng& rng) {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("net dimensions must be positive");
  }
  DenseNet net;
  net.input_dim_ = input_dim;
  net.output_dim_ = output_dim;

  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("hidden layer width must be positive");
    dims.push_back(h);
  }
  dims.push_back(output_dim);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    layer.weight = Matrix(fan_out, fan_in);
    layer.bias.assign(fan_out, 0.0);
    layer.activation = (l + 2 == dims.size()) ? Activation::kIdentity : hidden_activation;
    const double scale = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.weight.data()) w = rng.uniform(-scale, scale);
    net.layers_.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

void DenseNet::validate() const {
  if (layers_.empty()) throw std::invalid_argument("net has no layers");
  if (layers_.front().in_dim() != input_dim_ || layers_.back().out_dim() != output_dim_) {
    throw std::invalid_argument("net boundary dimensions do not match layers");
  }
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l].out_dim() != layers_[l + 1].in_dim()) {
      throw std::invalid_argument("layer dimensions do not chain");
    }
  }
  for (const auto& layer : layers_) {
    if (static_cast<int>(layer.bias.size()) != layer.out_dim()) {
      throw std::invalid_argument("bias length does not match layer width");
    }
    for (double w : layer.weight.data()) {
      if (!std::isfinite(w)) throw std::invalid_argument("non-finite weight");
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw std::invalid_argument("non-finite bias");
    }
  }
}

ForwardTrace DenseNet::forward_trace(const Matrix& inputs) const {
  if (inputs.cols() != input_dim_) {
    throw std::invalid_argument("input width " + std::to_string(inputs.cols()) +
                                " does not match net input dimension " +
                                std::to_string(input_dim_));
  }
  const int n = inputs.rows();
  ForwardTrace trace;
  trace.post.reserve(layers_.size() + 1);
  trace.pre.reserve(layers_.size());
  trace.post.push_back(inputs);

  for (const auto& layer : layers_) {
    const Matrix& x = trace.post.back();
    Matrix pre(n, layer.out_dim());
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < layer.out_dim(); ++o) {
        double acc = layer.bias[o];
        for (int j = 0; j < layer.in_dim(); ++j) {
          acc += layer.weight(o, j) * x(i, j);
        }
        pre(i, o) = acc;
      }
    }
    Matrix post(n, layer.out_dim());
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < layer.out_dim(); ++o) {
        post(i, o) = apply_activation(layer.activation, pre(i, o));
      }
    }
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(std::move(post));
  }
  return trace;
}

Matrix DenseNet::forward(const Matrix& inputs) const {
  return forward_trace(inputs).post.back();
}

NetGradients DenseNet::zero_gradients() const {
  NetGradients g;
  for (const auto& layer : layers_) {
    g.weight.emplace_back(layer.out_dim(), layer.in_dim());
    g.bias.emplace_back(layer.out_dim(), 0.0);
  }
  return g;
}

NetGradients DenseNet::backward(const ForwardTrace& trace, const Matrix& output_grad,
                                Matrix* input_grad) const {
  const int n = output_grad.rows();
  if (output_grad.cols() != output_dim_) {
    throw std::invalid_argument("output gradient width does not match net output dimension");
  }
  NetGradients grads = zero_gradients();

  Matrix upstream = output_grad;  // dL/d(post[l+1])
  for (int l = layer_count() - 1; l >= 0; --l) {
    const Layer& layer = layers_[l];
    const Matrix& pre = trace.pre[l];
    const Matrix& below = trace.post[l];

    Matrix dz(n, layer.out_dim());
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < layer.out_dim(); ++o) {
        dz(i, o) = upstream(i, o) * activation_grad(layer.activation, pre(i, o));
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < layer.out_dim(); ++o) {
        const double d = dz(i, o);
        grads.bias[l][o] += d;
        for (int j = 0; j < layer.in_dim(); ++j) {
          grads.weight[l](o, j) += d * below(i, j);
        }
      }
    }
    if (l > 0 || input_grad != nullptr) {
      Matrix down(n, layer.in_dim());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < layer.in_dim(); ++j) {
          double acc = 0.0;
          for (int o = 0; o < layer.out_dim(); ++o) {
            acc += dz(i, o) * layer.weight(o, j);
          }
          down(i, j) = acc;
        }
      }
      if (l == 0 && input_grad != nullptr) *input_grad = down;
      upstream = std::move(down);
    }
  }
  return grads;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += layer.weight.size() + layer.bias.size();
  }
  return count;
}

std::vector<double> DenseNet::parameters() const {
  std::vector<double> params;
  params.reserve(parameter_count());
  for (const auto& layer : layers_) {
    params.insert(params.end(), layer.weight.data().begin(), layer.weight.data().end());
    params.insert(params.end(), layer.bias.begin(), layer.bias.end());
  }
  return params;
}

void DenseNet::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector length mismatch");
  }
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (double& w : layer.weight.data()) w = params[k++];
    for (double& b : layer.bias) b = params[k++];
  }
}

void DenseNet::flatten_gradients(const NetGradients& g, std::vector<double>& out) {
  out.clear();
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    out.insert(out.end(), g.weight[l].data().begin(), g.weight[l].data().end());
    out.insert(out.end(), g.bias[l].begin(), g.bias[l].end());
  }
}

void DenseNet::save(std::ostream& os) const {
  os << "TSRL-NET v1\n";
  os << "layers " << layers_.size() << "\n";
  for (const auto& layer : layers_) {
    os << "layer " << layer.out_dim() << " " << layer.in_dim() << " "
       << activation_name(layer.activation) << "\n";
    for (int o = 0; o < layer.out_dim(); ++o) {
      for (int j = 0; j < layer.in_dim(); ++j) {
        if (j) os << " ";
        os << format_double(layer.weight(o, j));
      }
      os << "\n";
    }
    for (int o = 0; o < layer.out_dim(); ++o) {
      if (o) os << " ";
      os << format_double(layer.bias[o]);
    }
    os << "\n";
  }
}

DenseNet DenseNet::load(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header != "TSRL-NET v1") {
    throw std::invalid_argument("bad checkpoint header, expected 'TSRL-NET v1'");
  }
  std::string tag;
  std::size_t n_layers = 0;
  if (!(is >> tag >> n_layers) || tag != "layers" || n_layers == 0) {
    throw std::invalid_argument("bad checkpoint layer count");
  }
  DenseNet net;
  for (std::size_t l = 0; l < n_layers; ++l) {
    int out_dim = 0, in_dim = 0;
    std::string act;
    if (!(is >> tag >> out_dim >> in_dim >> act) || tag != "layer" || out_dim < 1 || in_dim < 1) {
      throw std::invalid_argument("bad checkpoint layer record");
    }
    Layer layer;
    layer.activation = activation_from_name(act);
    layer.weight = Matrix(out_dim, in_dim);
    layer.bias.assign(out_dim, 0.0);
    for (double& w : layer.weight.data()) {
      if (!(is >> w)) throw std::invalid_argument("truncated checkpoint weights");
    }
    for (double& b : layer.bias) {
      if (!(is >> b)) throw std::invalid_argument("truncated checkpoint biases");
    }
    net.layers_.push_back(std::move(layer));
  }
  net.input_dim_ = net.layers_.front().in_dim();
  net.output_dim_ = net.layers_.back().out_dim();
  net.validate();
  return net;
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string optimizer_kind_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t parameter_count)
    : kind_(kind), learning_rate_(learning_rate) {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (kind_ == OptimizerKind::kAdam) {
    m_.assign(parameter_count, 0.0);
    v_.assign(parameter_count, 0.0);
  }
}

void Optimizer::apply(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("parameter/gradient length mismatch");
  }
  ++step_;
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= learning_rate_ * grads[i];
    }
    return;
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("optimizer was sized for a different parameter count");
  }
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

}  // namespace tsrl
