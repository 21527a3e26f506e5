// Copyright 2026 The CISE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cise/nn.h"

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cise::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

int left_pad(const ConvLayer& layer) {
  return layer.padding == Padding::kCausal ? layer.kernel_width - 1
                                           : (layer.kernel_width - 1) / 2;
}

// Zero-padded copy of x with (k - 1) extra rows placed per the padding mode.
RowMat padded_input(const Tensor& x, const ConvLayer& layer) {
  const auto t = static_cast<Eigen::Index>(x.rows());
  RowMat xp = RowMat::Zero(t + layer.kernel_width - 1, layer.in_channels);
  xp.middleRows(left_pad(layer), t) = ConstMap(x.data(), t, layer.in_channels);
  return xp;
}

// Kernel tap j as an out x in matrix.
RowMat tap(const ConvLayer& layer, int j) {
  RowMat w(layer.out_channels, layer.in_channels);
  for (int o = 0; o < layer.out_channels; ++o) {
    for (int c = 0; c < layer.in_channels; ++c) w(o, c) = layer.weight(o, c, j);
  }
  return w;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool finite_values(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

ConvLayer ConvLayer::Make(int in_channels, int out_channels, int kernel_width,
                          Padding padding, Activation activation) {
  if (in_channels <= 0 || out_channels <= 0 || kernel_width <= 0) {
    throw std::invalid_argument("ConvLayer: sizes must be positive");
  }
  ConvLayer l;
  l.in_channels = in_channels;
  l.out_channels = out_channels;
  l.kernel_width = kernel_width;
  l.padding = padding;
  l.activation = activation;
  l.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel_width, 0.0);
  l.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  l.validate();
  return l;
}

void ConvLayer::validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw std::invalid_argument("ConvLayer: channel counts must be positive");
  }
  if (kernel_width <= 0 || kernel_width % 2 == 0) {
    throw std::invalid_argument("ConvLayer: kernel width must be odd");
  }
  if (weights.size() != static_cast<std::size_t>(out_channels) * in_channels * kernel_width ||
      bias.size() != static_cast<std::size_t>(out_channels)) {
    throw std::invalid_argument("ConvLayer: parameter sizes do not match shape");
  }
  if (!finite_values(weights) || !finite_values(bias)) {
    throw std::invalid_argument("ConvLayer: non-finite parameter");
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

int Network::input_channels() const {
  return layers.empty() ? 0 : layers.front().in_channels;
}

int Network::output_channels() const {
  return layers.empty() ? 0 : layers.back().out_channels;
}

void Network::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i - 1].out_channels != layers[i].in_channels) {
      throw std::invalid_argument("Network: layer " + std::to_string(i) +
                                  " input channels do not match previous output");
    }
  }
  if (!layers.empty() && layers.back().activation != Activation::kLinear) {
    throw std::invalid_argument("Network: output layer must be linear");
  }
}

void initialize(Network& net, std::uint64_t seed) {
  net.rng_seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& l : net.layers) {
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel_width;
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel_width;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : l.weights) w = (2.0 * uniform01(rng) - 1.0) * limit;
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

Tensor conv_forward(const Tensor& x, const ConvLayer& layer) {
  if (x.cols() != static_cast<std::size_t>(layer.in_channels)) {
    throw std::invalid_argument("conv_forward: input has " + std::to_string(x.cols()) +
                                " channels, layer expects " +
                                std::to_string(layer.in_channels));
  }
  const auto t = static_cast<Eigen::Index>(x.rows());
  Tensor y(x.rows(), static_cast<std::size_t>(layer.out_channels));
  if (t == 0) return y;

  // Accumulate in Eigen-owned storage: Eigen picks its summation order from
  // the buffer alignment, and std::vector buffers are not consistently aligned.
  const RowMat xp = padded_input(x, layer);
  RowMat acc(t, layer.out_channels);
  acc.rowwise() = Eigen::Map<const Eigen::RowVectorXd>(layer.bias.data(), layer.out_channels);
  for (int j = 0; j < layer.kernel_width; ++j) {
    acc.noalias() += xp.middleRows(j, t) * tap(layer, j).transpose();
  }
  MutMap(y.data(), t, layer.out_channels) = acc;
  if (layer.activation == Activation::kTanh) {
    for (double& v : y.values()) v = std::tanh(v);
  }
  return y;
}

Tensor network_forward(const Tensor& x, const Network& net) {
  Tensor h = x;
  for (const auto& layer : net.layers) h = conv_forward(h, layer);
  return h;
}

Tensor network_forward(const Tensor& x, const Network& net, ForwardTrace& trace) {
  trace.outputs.clear();
  trace.outputs.reserve(net.layers.size() + 1);
  trace.outputs.push_back(x);
  for (const auto& layer : net.layers) {
    trace.outputs.push_back(conv_forward(trace.outputs.back(), layer));
  }
  return trace.outputs.back();
}

Gradients zero_gradients(const Network& net) {
  Gradients g(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    g[i].weights.assign(net.layers[i].weights.size(), 0.0);
    g[i].bias.assign(net.layers[i].bias.size(), 0.0);
  }
  return g;
}

void scale(Gradients& g, double factor) {
  for (auto& l : g) {
    for (double& v : l.weights) v *= factor;
    for (double& v : l.bias) v *= factor;
  }
}

bool all_finite(const Gradients& g) {
  for (const auto& l : g) {
    if (!finite_values(l.weights) || !finite_values(l.bias)) return false;
  }
  return true;
}

Tensor backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output,
                Gradients& grads) {
  if (trace.outputs.size() != net.layers.size() + 1) {
    throw std::logic_error("backward: no forward trace for this network");
  }
  if (grads.size() != net.layers.size()) {
    throw std::invalid_argument("backward: gradient buffer does not match network");
  }
  require_same_shape(grad_output, trace.outputs.back(), "backward");

  Tensor upstream = grad_output;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const ConvLayer& layer = net.layers[li];
    const Tensor& x = trace.outputs[li];
    const Tensor& y = trace.outputs[li + 1];
    if (x.cols() != static_cast<std::size_t>(layer.in_channels) || !y.same_shape(upstream)) {
      throw std::logic_error("backward: trace does not match network");
    }
    const auto t = static_cast<Eigen::Index>(x.rows());
    const int cin = layer.in_channels;
    const int cout = layer.out_channels;

    // Gradient at the pre-activation.
    RowMat dz = ConstMap(upstream.data(), t, cout);
    if (layer.activation == Activation::kTanh) {
      dz.array() *= 1.0 - ConstMap(y.data(), t, cout).array().square();
    }

    LayerGradient& g = grads[li];
    const Eigen::RowVectorXd db = dz.colwise().sum();
    for (int o = 0; o < cout; ++o) g.bias[o] += db(o);

    const RowMat xp = padded_input(x, layer);
    RowMat dxp = RowMat::Zero(xp.rows(), cin);
    for (int j = 0; j < layer.kernel_width; ++j) {
      const RowMat dw = dz.transpose() * xp.middleRows(j, t);  // out x in
      for (int o = 0; o < cout; ++o) {
        for (int c = 0; c < cin; ++c) {
          g.weights[(static_cast<std::size_t>(o) * cin + c) * layer.kernel_width + j] +=
              dw(o, c);
        }
      }
      dxp.middleRows(j, t).noalias() += dz * tap(layer, j);
    }

    Tensor dx(x.rows(), static_cast<std::size_t>(cin));
    MutMap(dx.data(), t, cin) = dxp.middleRows(left_pad(layer), t);
    upstream = std::move(dx);
  }
  return upstream;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output) {
  Gradients g = zero_gradients(net);
  backward(net, trace, grad_output, g);
  return g;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  LossResult r;
  r.grad = Tensor(pred.rows(), pred.cols());
  const std::size_t n = pred.size();
  if (n == 0) return r;
  double acc = 0.0;
  const double g_scale = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.values()[i] - target.values()[i];
    acc += d * d;
    r.grad.values()[i] = g_scale * d;
  }
  r.loss = acc / static_cast<double>(n);
  return r;
}

AdamState AdamState::Make(const Network& net, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.m = zero_gradients(net);
  s.v = zero_gradients(net);
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const AdamConfig& cfg = state.config;
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("adam_step: lr must be > 0");
  if (grads.size() != net.layers.size() || state.m.size() != net.layers.size() ||
      state.v.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: gradient/state shape mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& l = net.layers[i];
    if (grads[i].weights.size() != l.weights.size() || grads[i].bias.size() != l.bias.size() ||
        state.m[i].weights.size() != l.weights.size() ||
        state.v[i].weights.size() != l.weights.size() ||
        state.m[i].bias.size() != l.bias.size() || state.v[i].bias.size() != l.bias.size()) {
      throw std::invalid_argument("adam_step: gradient/state shape mismatch");
    }
  }
  if (!all_finite(grads)) throw std::domain_error("adam_step: non-finite gradient");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& l = net.layers[i];
    update(l.weights, grads[i].weights, state.m[i].weights, state.v[i].weights);
    update(l.bias, grads[i].bias, state.m[i].bias, state.v[i].bias);
  }
}

}  // namespace cise::nn
