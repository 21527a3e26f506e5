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

// The three CNN enhancement architectures (direct, noise-subtracting and
// mask-estimating), each in causal and centred form, plus their training loop.

#ifndef CISE_SE_MODELS_H_
#define CISE_SE_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cise/ci_features.h"
#include "cise/common.h"
#include "cise/nn.h"

namespace cise::se {

enum class ArchKind : std::uint8_t {
  kVanilla = 0,      // network predicts clean features
  kSpectralSub = 1,  // network predicts noise features, subtracted from the input
  kWienerMask = 2,   // network predicts a multiplicative mask
};

struct SeArchitecture {
  ArchKind kind = ArchKind::kVanilla;
  bool causal = false;

  // "vanilla", "ss-cnn", "wiener-cnn", with a "-causal" suffix when causal.
  std::string name() const;
  static SeArchitecture Parse(std::string_view name);
  friend bool operator==(const SeArchitecture&, const SeArchitecture&) = default;
};

// All six architecture variants in a stable order.
std::vector<SeArchitecture> all_architectures();

struct ModelShape {
  int channels = static_cast<int>(ci::kNumChannels);
  int hidden_layers = 6;
  int hidden_channels = 65;
  int kernel_width = 5;
};

// hidden_layers tanh conv layers followed by one linear output layer, all
// padded per arch.causal. The mask network's output bias starts at 1 so an
// untrained mask is the identity.
nn::Network build_model(const SeArchitecture& arch, std::uint64_t seed,
                        const ModelShape& shape = {});

// Per-channel statistics of log(1 + energy).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t channels() const { return mean.size(); }
};

inline constexpr double kStdFloor = 1e-6;

NormStats compute_norm_stats(std::span<const Matrix> energies);

// (log(1 + y) - mean) / std, per channel.
nn::Tensor normalize(const Matrix& energies, const NormStats& stats);
// Inverse of normalize, floored at zero energy.
Matrix denormalize(const nn::Tensor& z, const NormStats& stats);

struct EnhanceOptions {
  bool clamp_mask = false;  // clamp WienerMask output to [0, 2]
};

// Maps the raw network output f to enhanced energies given the noisy input y.
Matrix apply_head(const SeArchitecture& arch, const Matrix& noisy, const nn::Tensor& f,
                  const NormStats& stats, const EnhanceOptions& opts = {});

ci::CiFeatureSequence enhance(const ci::CiFeatureSequence& noisy, const nn::Network& net,
                              const SeArchitecture& arch, const NormStats& stats,
                              const EnhanceOptions& opts = {});

struct TrainingExample {
  Matrix noisy;  // T x 22 energies
  Matrix clean;
  Matrix noise;  // features of the scaled noise alone (SpectralSub target)
};

// Indexable training data. `epoch` lets a source vary its content between
// epochs (for example a different noise condition per pass).
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainingExample get(std::size_t index, int epoch) const = 0;
};

class InMemoryExamples : public ExampleSource {
 public:
  explicit InMemoryExamples(std::vector<TrainingExample> examples)
      : examples_(std::move(examples)) {}
  std::size_t size() const override { return examples_.size(); }
  TrainingExample get(std::size_t index, int) const override { return examples_.at(index); }

 private:
  std::vector<TrainingExample> examples_;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  bool dev_selection = true;
  // Random crop length per example and epoch; 0 trains on whole utterances.
  // Dev examples use a fixed crop of the same length.
  std::size_t crop_frames = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double dev_mse = 0.0;
};

struct TrainResult {
  nn::Network network;
  NormStats stats;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

// 1-based epoch with the lowest dev MSE; ties go to the earliest.
int select_best_epoch(std::span<const EpochRecord> history);

// Loss of one example in the architecture's training domain: normalised log
// features for Vanilla and SpectralSub, per-channel scaled linear energies
// after masking for WienerMask. When `grads` is non-null the example's
// gradient times `grad_scale` is accumulated into it.
double example_loss(const SeArchitecture& arch, const nn::Network& net,
                    const NormStats& stats, const TrainingExample& ex,
                    nn::Gradients* grads = nullptr, double grad_scale = 1.0);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const SeArchitecture& arch, const ExampleSource& train_set,
                  const ExampleSource& dev_set, const TrainConfig& cfg,
                  const ModelShape& shape = {}, const EpochCallback& on_epoch = {});

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

// A trained enhancer: architecture descriptor, normalisation and weights.
struct SeModel {
  SeArchitecture arch;
  NormStats stats;
  nn::Network network;
};

// Model file: magic "CISA", version, architecture, norm stats, followed by a
// neural-core checkpoint.
void save_model(const std::filesystem::path& path, const SeModel& model);
SeModel load_model(const std::filesystem::path& path);

}  // namespace cise::se

#endif  // CISE_SE_MODELS_H_
