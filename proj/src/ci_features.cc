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

#include "cise/ci_features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "cise/raster.h"

namespace cise::ci {
namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double triangle(double f, double lo, double peak, double hi) {
  if (f <= lo || f >= hi) return 0.0;
  if (f <= peak) return (f - lo) / (peak - lo);
  return (hi - f) / (hi - peak);
}

// Like format_double but always shows a decimal point ("1" -> "1.0").
std::string format_energy(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

FilterBank build_filterbank(std::size_t fft_size, double sample_rate) {
  if (!is_power_of_two(fft_size)) {
    throw std::invalid_argument("build_filterbank: fft_size must be a power of two");
  }
  if (kHighEdgeHz > sample_rate / 2.0 + 1e-9) {
    throw std::invalid_argument("build_filterbank: band exceeds Nyquist");
  }

  FilterBank fb;
  fb.sample_rate = sample_rate;
  fb.fft_size = fft_size;
  const double ratio = std::pow(kHighEdgeHz / kLowEdgeHz, 1.0 / kNumChannels);
  fb.band_edges.resize(kNumChannels + 1);
  for (std::size_t i = 0; i <= kNumChannels; ++i) {
    fb.band_edges[i] = kLowEdgeHz * std::pow(ratio, static_cast<double>(i));
  }
  fb.band_edges.back() = kHighEdgeHz;
  fb.centers.resize(kNumChannels);
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    fb.centers[i] = std::sqrt(fb.band_edges[i] * fb.band_edges[i + 1]);
  }

  const std::size_t bins = fft_size / 2 + 1;
  const double bin_hz = sample_rate / static_cast<double>(fft_size);
  fb.weights = Matrix(kNumChannels, bins);
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    const double peak = fb.centers[ch];
    const double lo = ch == 0 ? peak / ratio : fb.centers[ch - 1];
    const double hi = ch + 1 == kNumChannels ? peak * ratio : fb.centers[ch + 1];
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double w = triangle(static_cast<double>(k) * bin_hz, lo, peak, hi);
      fb.weights(ch, k) = w;
      any = any || w > 0.0;
    }
    if (!any) {
      throw std::invalid_argument("build_filterbank: channel " + std::to_string(ch + 1) +
                                  " has no FFT bin (fft_size too small)");
    }
  }
  return fb;
}

CiFeatureSequence extract_features(const dsp::PowerSpectrogram& spec, const FilterBank& fb) {
  if (spec.num_bins() != fb.num_bins()) {
    throw std::invalid_argument("extract_features: spectrogram has " +
                                std::to_string(spec.num_bins()) + " bins, filterbank " +
                                std::to_string(fb.num_bins()));
  }
  const std::size_t frames = spec.num_frames();
  const std::size_t channels = fb.num_channels();
  CiFeatureSequence out;
  out.frame_rate = spec.frame_rate;
  out.features = Matrix(frames, channels);
  for (std::size_t t = 0; t < frames; ++t) {
    auto s = spec.frames.row(t);
    for (std::size_t c = 0; c < channels; ++c) {
      auto w = fb.weights.row(c);
      out.features(t, c) = std::inner_product(s.begin(), s.end(), w.begin(), 0.0);
    }
  }
  return out;
}

FeatureExtractor::FeatureExtractor(dsp::WindowConfig cfg, double pre_emphasis)
    : cfg_(std::move(cfg)),
      pre_emphasis_(pre_emphasis),
      fb_(build_filterbank(cfg_.fft_size)) {
  cfg_.validate();
}

dsp::PowerSpectrogram FeatureExtractor::spectrogram(const audio::AudioSignal& signal) const {
  return dsp::analyze(signal, cfg_, pre_emphasis_);
}

CiFeatureSequence FeatureExtractor::features(const audio::AudioSignal& signal) const {
  return extract_features(spectrogram(signal), fb_);
}

CiFeatureSequence FeatureExtractor::features(const dsp::PowerSpectrogram& spec) const {
  return extract_features(spec, fb_);
}

Electrodogram select_n_of_m(const CiFeatureSequence& feat, std::size_t n) {
  const std::size_t channels = feat.features.cols();
  if (n < 1 || n > channels) {
    throw std::invalid_argument("select_n_of_m: n must be in [1, channels]");
  }
  Electrodogram e;
  e.stimulation = Matrix(feat.features.rows(), channels);
  std::vector<std::size_t> order(channels);
  for (std::size_t t = 0; t < feat.features.rows(); ++t) {
    auto row = feat.features.row(t);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = order[i];
      if (!(row[c] > 0.0)) break;
      e.stimulation(t, c) = row[c];
    }
  }
  return e;
}

void write_electrodogram_csv(const std::filesystem::path& path, const Electrodogram& e) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "frame,channel,energy\n";
  for (std::size_t t = 0; t < e.stimulation.rows(); ++t) {
    for (std::size_t c = 0; c < e.stimulation.cols(); ++c) {
      const double v = e.stimulation(t, c);
      if (v != 0.0) out << t << ',' << (c + 1) << ',' << format_energy(v) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Electrodogram read_electrodogram_csv(const std::filesystem::path& path,
                                     std::size_t num_frames, std::size_t num_channels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "frame,channel,energy") {
    throw FormatError(path.string() + ": missing electrodogram header");
  }
  struct Entry {
    std::size_t frame, channel;
    double energy;
  };
  std::vector<Entry> entries;
  std::size_t max_frame = 0;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    auto f = split(t, ',');
    if (f.size() != 3) throw FormatError(path.string() + ": bad row '" + t + "'");
    Entry e{};
    try {
      e.frame = std::stoul(f[0]);
      e.channel = std::stoul(f[1]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad row '" + t + "'");
    }
    auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), e.energy);
    if (res.ec != std::errc() || e.channel < 1 || e.channel > num_channels) {
      throw FormatError(path.string() + ": bad row '" + t + "'");
    }
    max_frame = std::max(max_frame, e.frame + 1);
    entries.push_back(e);
  }
  if (num_frames == 0) num_frames = max_frame;
  if (max_frame > num_frames) throw FormatError(path.string() + ": frame index out of range");
  Electrodogram e;
  e.stimulation = Matrix(num_frames, num_channels);
  for (const auto& x : entries) e.stimulation(x.frame, x.channel - 1) = x.energy;
  return e;
}

void write_electrodogram_png(const std::filesystem::path& path, const Electrodogram& e) {
  constexpr int kRowPx = 8;
  const int frames = static_cast<int>(std::max<std::size_t>(e.stimulation.rows(), 1));
  const int channels = static_cast<int>(e.stimulation.cols());
  raster::Image img(frames, channels * kRowPx, raster::kBlack);
  double peak = 0.0;
  for (double v : e.stimulation.values()) peak = std::max(peak, v);
  if (peak > 0.0) {
    for (int t = 0; t < static_cast<int>(e.stimulation.rows()); ++t) {
      for (int c = 0; c < channels; ++c) {
        const double v = e.stimulation(t, c) / peak;
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 * v));
        const int y0 = (channels - 1 - c) * kRowPx;
        for (int y = y0 + 1; y < y0 + kRowPx; ++y) img.set(t, y, {g, g, g});
      }
    }
  }
  img.write_png(path);
}

void render_electrodogram(const Electrodogram& e, const std::filesystem::path& prefix) {
  std::filesystem::path csv = prefix;
  csv += ".csv";
  std::filesystem::path png = prefix;
  png += ".png";
  write_electrodogram_csv(csv, e);
  write_electrodogram_png(png, e);
}

}  // namespace cise::ci
