#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "tsrl/net.hpp"

namespace tsrl::testing {

/// Central finite differences of a scalar function over a flat parameter
/// vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> params, double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double hi = f(params);
    params[i] = saved - h;
    const double lo = f(params);
    params[i] = saved;
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), 1e-6});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// Independent layer-by-layer re-evaluation of a dense net on one input,
/// written as plain scalar loops (summing features in reverse order so the
/// accumulation differs from the implementation under test).
inline std::vector<double> scalar_forward_oracle(const DenseNet& net,
                                                 const std::vector<double>& input) {
  std::vector<double> x = input;
  for (int l = 0; l < net.layer_count(); ++l) {
    const Layer& layer = net.layer(l);
    std::vector<double> y(layer.out_dim());
    for (int o = 0; o < layer.out_dim(); ++o) {
      double acc = 0.0;
      for (int j = layer.in_dim() - 1; j >= 0; --j) acc += layer.weight(o, j) * x[j];
      acc += layer.bias[o];
      switch (layer.activation) {
        case Activation::kRelu:
          y[o] = acc > 0.0 ? acc : 0.0;
          break;
        case Activation::kTanh:
          y[o] = std::tanh(acc);
          break;
        case Activation::kIdentity:
          y[o] = acc;
          break;
      }
    }
    x = std::move(y);
  }
  return x;
}

/// True when some pre-activation of the net sits within `margin` of a relu
/// kink, which would poison a finite-difference probe.
inline bool near_relu_kink(const DenseNet& net, const Matrix& inputs, double margin = 1e-4) {
  const ForwardTrace trace = net.forward_trace(inputs);
  for (int l = 0; l < net.layer_count(); ++l) {
    if (net.layer(l).activation != Activation::kRelu) continue;
    for (double v : trace.pre[l].data()) {
      if (std::fabs(v) < margin) return true;
    }
  }
  return false;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace tsrl::testing
