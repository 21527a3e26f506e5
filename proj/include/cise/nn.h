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

// Minimal 1-D convolutional network engine: forward pass, exact reverse-mode
// gradients, Adam and binary checkpoints. Tensors are T x C (time x channel).

#ifndef CISE_NN_H_
#define CISE_NN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cise/common.h"

namespace cise::nn {

using Tensor = Matrix;

enum class Padding : std::uint8_t {
  kCentered = 0,  // (k-1)/2 zeros on each side
  kCausal = 1,    // k-1 zeros on the left only
};

enum class Activation : std::uint8_t { kLinear = 0, kTanh = 1 };

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_width = 1;  // odd
  Padding padding = Padding::kCentered;
  Activation activation = Activation::kLinear;
  std::vector<double> weights;  // [out][in][k]
  std::vector<double> bias;     // [out]

  // Zero-initialised layer of the given shape.
  static ConvLayer Make(int in_channels, int out_channels, int kernel_width, Padding padding,
                        Activation activation);

  double& weight(int o, int c, int j) {
    return weights[(static_cast<std::size_t>(o) * in_channels + c) * kernel_width + j];
  }
  double weight(int o, int c, int j) const {
    return weights[(static_cast<std::size_t>(o) * in_channels + c) * kernel_width + j];
  }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
  void validate() const;
};

struct Network {
  std::vector<ConvLayer> layers;
  std::uint64_t rng_seed = 0;

  std::size_t parameter_count() const;
  int input_channels() const;
  int output_channels() const;
  // Channel chaining, odd kernels, finite parameters, linear output layer.
  void validate() const;
};

// Glorot-uniform weights, zero biases, drawn from rng_seed.
void initialize(Network& net, std::uint64_t seed);

Tensor conv_forward(const Tensor& x, const ConvLayer& layer);
Tensor network_forward(const Tensor& x, const Network& net);

// Activations recorded by a training forward pass: outputs[0] is the input,
// outputs[i + 1] the output of layer i.
struct ForwardTrace {
  std::vector<Tensor> outputs;
};

Tensor network_forward(const Tensor& x, const Network& net, ForwardTrace& trace);

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};
using Gradients = std::vector<LayerGradient>;

Gradients zero_gradients(const Network& net);
void scale(Gradients& g, double factor);
bool all_finite(const Gradients& g);

// Adds dLoss/dParams for one example to `grads`. Requires the trace from the
// matching network_forward call. Returns dLoss/dInput.
Tensor backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output,
                Gradients& grads);
// Convenience form that starts from zero gradients.
Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_output);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dLoss/dPred
};

// Mean squared error over all T*C elements.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  Gradients m;  // first moments, shaped like the parameters
  Gradients v;  // second moments

  static AdamState Make(const Network& net, const AdamConfig& config = {});
};

// One bias-corrected Adam update. A non-finite gradient throws before any
// parameter or moment is touched.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

// Checkpoint files: little-endian, magic "CISE", format version, layer table,
// raw parameter block, optional Adam moments.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Stored layer table disagrees with the network being restored.
class StructureMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  Network network;
  std::optional<AdamState> optimizer;
};

void write_checkpoint(std::ostream& out, const Network& net, const AdamState* optimizer);
Checkpoint read_checkpoint(std::istream& in);

void checkpoint_save(const std::filesystem::path& path, const Network& net,
                     const AdamState* optimizer = nullptr);
Checkpoint checkpoint_load(const std::filesystem::path& path);
// Restores into an existing network whose layer table must match the file.
void checkpoint_load_into(const std::filesystem::path& path, Network& net,
                          AdamState* optimizer = nullptr);

}  // namespace cise::nn

#endif  // CISE_NN_H_
