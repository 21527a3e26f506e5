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

#include "cise/se_models.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cise::se {
namespace {

constexpr char kModelMagic[4] = {'C', 'I', 'S', 'A'};
constexpr std::uint32_t kModelVersion = 1;
// Keeps exp() finite for any network output.
constexpr double kMaxLogEnergy = 700.0;

void require_channels(const Matrix& m, const NormStats& stats, std::string_view what) {
  if (m.cols() != stats.channels()) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(stats.channels()) + " channels, got " +
                                std::to_string(m.cols()));
  }
}

Matrix crop(const Matrix& m, std::size_t offset, std::size_t frames) {
  return m.slice_rows(offset, frames);
}

TrainingExample crop_example(const TrainingExample& ex, std::size_t crop_frames,
                             std::uint64_t seed) {
  const std::size_t t = ex.noisy.rows();
  if (crop_frames == 0 || t <= crop_frames) return ex;
  std::mt19937_64 rng(seed);
  const std::size_t offset = static_cast<std::size_t>(rng() % (t - crop_frames + 1));
  TrainingExample out;
  out.noisy = crop(ex.noisy, offset, crop_frames);
  out.clean = crop(ex.clean, offset, crop_frames);
  if (!ex.noise.empty()) out.noise = crop(ex.noise, offset, crop_frames);
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw nn::CheckpointError("model: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t v = get_le(in, 8);
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

}  // namespace

std::string SeArchitecture::name() const {
  std::string base;
  switch (kind) {
    case ArchKind::kVanilla: base = "vanilla"; break;
    case ArchKind::kSpectralSub: base = "ss-cnn"; break;
    case ArchKind::kWienerMask: base = "wiener-cnn"; break;
  }
  return causal ? base + "-causal" : base;
}

SeArchitecture SeArchitecture::Parse(std::string_view name) {
  constexpr std::string_view kSuffix = "-causal";
  SeArchitecture a;
  if (name.size() > kSuffix.size() && name.substr(name.size() - kSuffix.size()) == kSuffix) {
    a.causal = true;
    name.remove_suffix(kSuffix.size());
  }
  if (name == "vanilla") {
    a.kind = ArchKind::kVanilla;
  } else if (name == "ss-cnn") {
    a.kind = ArchKind::kSpectralSub;
  } else if (name == "wiener-cnn") {
    a.kind = ArchKind::kWienerMask;
  } else {
    throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
  }
  return a;
}

std::vector<SeArchitecture> all_architectures() {
  std::vector<SeArchitecture> out;
  for (ArchKind k : {ArchKind::kVanilla, ArchKind::kSpectralSub, ArchKind::kWienerMask}) {
    out.push_back({k, false});
    out.push_back({k, true});
  }
  return out;
}

nn::Network build_model(const SeArchitecture& arch, std::uint64_t seed, const ModelShape& shape) {
  if (shape.hidden_layers < 0 || shape.hidden_channels <= 0 || shape.channels <= 0) {
    throw std::invalid_argument("build_model: bad model shape");
  }
  const nn::Padding pad = arch.causal ? nn::Padding::kCausal : nn::Padding::kCentered;
  nn::Network net;
  int in = shape.channels;
  for (int i = 0; i < shape.hidden_layers; ++i) {
    net.layers.push_back(nn::ConvLayer::Make(in, shape.hidden_channels, shape.kernel_width, pad,
                                             nn::Activation::kTanh));
    in = shape.hidden_channels;
  }
  net.layers.push_back(
      nn::ConvLayer::Make(in, shape.channels, shape.kernel_width, pad, nn::Activation::kLinear));
  nn::initialize(net, seed);
  if (arch.kind == ArchKind::kWienerMask) {
    auto& b = net.layers.back().bias;
    std::fill(b.begin(), b.end(), 1.0);
  }
  return net;
}

NormStats compute_norm_stats(std::span<const Matrix> energies) {
  if (energies.empty()) throw std::invalid_argument("compute_norm_stats: no data");
  const std::size_t channels = energies.front().cols();
  std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
  std::size_t count = 0;
  for (const Matrix& m : energies) {
    if (m.cols() != channels) throw std::invalid_argument("compute_norm_stats: channel mismatch");
    for (std::size_t t = 0; t < m.rows(); ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = std::log1p(std::max(m(t, c), 0.0));
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    count += m.rows();
  }
  if (count == 0) throw std::invalid_argument("compute_norm_stats: no frames");
  NormStats s;
  s.mean.resize(channels);
  s.stddev.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double mean = sum[c] / static_cast<double>(count);
    const double var = std::max(sum_sq[c] / static_cast<double>(count) - mean * mean, 0.0);
    s.mean[c] = mean;
    s.stddev[c] = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

nn::Tensor normalize(const Matrix& energies, const NormStats& stats) {
  require_channels(energies, stats, "normalize");
  nn::Tensor z(energies.rows(), energies.cols());
  for (std::size_t t = 0; t < energies.rows(); ++t) {
    for (std::size_t c = 0; c < energies.cols(); ++c) {
      z(t, c) = (std::log1p(std::max(energies(t, c), 0.0)) - stats.mean[c]) / stats.stddev[c];
    }
  }
  return z;
}

Matrix denormalize(const nn::Tensor& z, const NormStats& stats) {
  require_channels(z, stats, "denormalize");
  Matrix y(z.rows(), z.cols());
  for (std::size_t t = 0; t < z.rows(); ++t) {
    for (std::size_t c = 0; c < z.cols(); ++c) {
      const double log_energy = std::min(z(t, c) * stats.stddev[c] + stats.mean[c], kMaxLogEnergy);
      y(t, c) = std::max(std::expm1(log_energy), 0.0);
    }
  }
  return y;
}

Matrix apply_head(const SeArchitecture& arch, const Matrix& noisy, const nn::Tensor& f,
                  const NormStats& stats, const EnhanceOptions& opts) {
  require_same_shape(noisy, f, "apply_head");
  if (!f.all_finite()) throw std::domain_error("enhance: non-finite network output");
  switch (arch.kind) {
    case ArchKind::kVanilla:
      return denormalize(f, stats);
    case ArchKind::kSpectralSub: {
      Matrix s = denormalize(f, stats);
      for (std::size_t i = 0; i < s.size(); ++i) {
        s.values()[i] = std::max(noisy.values()[i] - s.values()[i], 0.0);
      }
      return s;
    }
    case ArchKind::kWienerMask: {
      Matrix s(noisy.rows(), noisy.cols());
      for (std::size_t i = 0; i < s.size(); ++i) {
        double mask = f.values()[i];
        if (opts.clamp_mask) mask = std::clamp(mask, 0.0, 2.0);
        s.values()[i] = std::max(noisy.values()[i] * mask, 0.0);
      }
      return s;
    }
  }
  throw std::logic_error("apply_head: unknown architecture");
}

ci::CiFeatureSequence enhance(const ci::CiFeatureSequence& noisy, const nn::Network& net,
                              const SeArchitecture& arch, const NormStats& stats,
                              const EnhanceOptions& opts) {
  require_channels(noisy.features, stats, "enhance");
  if (net.input_channels() != static_cast<int>(stats.channels()) ||
      net.output_channels() != static_cast<int>(stats.channels())) {
    throw std::invalid_argument("enhance: network channels do not match features");
  }
  const nn::Tensor f = nn::network_forward(normalize(noisy.features, stats), net);
  ci::CiFeatureSequence out;
  out.frame_rate = noisy.frame_rate;
  out.features = apply_head(arch, noisy.features, f, stats, opts);
  return out;
}

double example_loss(const SeArchitecture& arch, const nn::Network& net, const NormStats& stats,
                    const TrainingExample& ex, nn::Gradients* grads, double grad_scale) {
  require_same_shape(ex.noisy, ex.clean, "example_loss");
  nn::ForwardTrace trace;
  const nn::Tensor f = nn::network_forward(normalize(ex.noisy, stats), net, trace);

  nn::LossResult r;
  switch (arch.kind) {
    case ArchKind::kVanilla:
      r = nn::mse_loss(f, normalize(ex.clean, stats));
      break;
    case ArchKind::kSpectralSub:
      require_same_shape(ex.noisy, ex.noise, "example_loss (noise target)");
      r = nn::mse_loss(f, normalize(ex.noise, stats));
      break;
    case ArchKind::kWienerMask: {
      // Linear-domain error, each channel divided by its typical energy
      // exp(mean log(1 + y)) so quiet channels are not ignored.
      const std::size_t channels = stats.channels();
      std::vector<double> inv_scale(channels);
      for (std::size_t c = 0; c < channels; ++c) inv_scale[c] = std::exp(-stats.mean[c]);
      nn::Tensor pred(f.rows(), f.cols()), target(f.rows(), f.cols());
      for (std::size_t t = 0; t < f.rows(); ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
          pred(t, c) = ex.noisy(t, c) * f(t, c) * inv_scale[c];
          target(t, c) = ex.clean(t, c) * inv_scale[c];
        }
      }
      r = nn::mse_loss(pred, target);
      for (std::size_t t = 0; t < f.rows(); ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
          r.grad(t, c) *= ex.noisy(t, c) * inv_scale[c];
        }
      }
      break;
    }
  }
  if (grads != nullptr) {
    if (grad_scale != 1.0) {
      for (double& g : r.grad.values()) g *= grad_scale;
    }
    nn::backward(net, trace, r.grad, *grads);
  }
  return r.loss;
}

int select_best_epoch(std::span<const EpochRecord> history) {
  if (history.empty()) throw std::invalid_argument("select_best_epoch: empty history");
  const auto it = std::min_element(
      history.begin(), history.end(),
      [](const EpochRecord& a, const EpochRecord& b) { return a.dev_mse < b.dev_mse; });
  return it->epoch;
}

TrainResult train(const SeArchitecture& arch, const ExampleSource& train_set,
                  const ExampleSource& dev_set, const TrainConfig& cfg, const ModelShape& shape,
                  const EpochCallback& on_epoch) {
  if (train_set.size() == 0) throw std::invalid_argument("train: empty train set");
  if (dev_set.size() == 0) throw std::invalid_argument("train: empty dev set");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  TrainResult result;
  {
    std::vector<Matrix> noisy;
    noisy.reserve(train_set.size());
    for (std::size_t i = 0; i < train_set.size(); ++i) noisy.push_back(train_set.get(i, 0).noisy);
    result.stats = compute_norm_stats(noisy);
  }

  std::vector<TrainingExample> dev;
  dev.reserve(dev_set.size());
  for (std::size_t i = 0; i < dev_set.size(); ++i) {
    dev.push_back(crop_example(dev_set.get(i, 0), cfg.crop_frames,
                               derive_seed(cfg.seed, {0xdefULL, i})));
  }

  nn::Network net = build_model(arch, derive_seed(cfg.seed, {0x1417ULL}), shape);
  nn::AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  nn::AdamState adam = nn::AdamState::Make(net, adam_cfg);

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  double best_dev = std::numeric_limits<double>::infinity();
  result.network = net;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {0x5affULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng() % (i + 1))]);
    }

    double train_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      nn::Gradients grads = nn::zero_gradients(net);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const TrainingExample ex = crop_example(
            train_set.get(idx, epoch), cfg.crop_frames,
            derive_seed(cfg.seed, {0xc409ULL, static_cast<std::uint64_t>(epoch), idx}));
        const double loss = example_loss(arch, net, result.stats, ex, &grads, inv_batch);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "train(" << arch.name() << "): non-finite loss at epoch " << epoch
              << ", example " << idx;
          throw Error(msg.str());
        }
        train_sum += loss;
      }
      nn::adam_step(net, grads, adam);
    }

    double dev_sum = 0.0;
    for (const auto& ex : dev) dev_sum += example_loss(arch, net, result.stats, ex);

    EpochRecord rec{epoch, train_sum / static_cast<double>(n),
                    dev_sum / static_cast<double>(dev.size())};
    if (!std::isfinite(rec.dev_mse)) {
      throw Error("train(" + arch.name() + "): non-finite dev loss at epoch " +
                  std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (!cfg.dev_selection || rec.dev_mse < best_dev) {
      best_dev = std::min(best_dev, rec.dev_mse);
      result.network = net;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_mse,dev_mse\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train_mse) << ',' << format_double(r.dev_mse)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_model(const std::filesystem::path& path, const SeModel& model) {
  if (model.stats.mean.size() != model.stats.stddev.size()) {
    throw std::invalid_argument("save_model: inconsistent norm stats");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kModelMagic, 4);
  put_u32(out, kModelVersion);
  out.put(static_cast<char>(model.arch.kind));
  out.put(static_cast<char>(model.arch.causal ? 1 : 0));
  put_u32(out, static_cast<std::uint32_t>(model.stats.channels()));
  for (double v : model.stats.mean) put_f64(out, v);
  for (double v : model.stats.stddev) put_f64(out, v);
  nn::write_checkpoint(out, model.network, nullptr);
}

SeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw nn::CheckpointError(path.string() + ": not a model file");
  }
  if (get_le(in, 4) != kModelVersion) throw nn::CheckpointError("model: unsupported version");
  SeModel m;
  const auto kind = static_cast<std::uint8_t>(get_le(in, 1));
  if (kind > 2) throw nn::CheckpointError("model: unknown architecture");
  m.arch.kind = static_cast<ArchKind>(kind);
  m.arch.causal = get_le(in, 1) != 0;
  const auto channels = static_cast<std::size_t>(get_le(in, 4));
  if (channels == 0 || channels > 4096) throw nn::CheckpointError("model: bad channel count");
  m.stats.mean.resize(channels);
  m.stats.stddev.resize(channels);
  for (double& v : m.stats.mean) v = get_f64(in);
  for (double& v : m.stats.stddev) v = get_f64(in);
  m.network = nn::read_checkpoint(in).network;
  if (m.network.input_channels() != static_cast<int>(channels)) {
    throw nn::StructureMismatchError("model: network does not match norm stats");
  }
  return m;
}

}  // namespace cise::se
