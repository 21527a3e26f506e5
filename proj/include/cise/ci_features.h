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

// Cochlear-implant front-end emulation: 22-channel filterbank energies,
// n-of-m channel selection and electrodogram export.

#ifndef CISE_CI_FEATURES_H_
#define CISE_CI_FEATURES_H_

#include <cstddef>
#include <filesystem>
#include <vector>

#include "cise/audio_io.h"
#include "cise/common.h"
#include "cise/dsp.h"

namespace cise::ci {

inline constexpr std::size_t kNumChannels = 22;
inline constexpr std::size_t kDefaultSelected = 8;
inline constexpr double kLowEdgeHz = 250.0;
inline constexpr double kHighEdgeHz = 8000.0;

// Log-spaced bands between kLowEdgeHz and kHighEdgeHz. Channel i is a
// triangle peaking at the geometric centre of band i and falling to zero at
// the centres of the neighbouring bands, so every bin in the analysed range
// feeds one or two adjacent channels.
struct FilterBank {
  std::vector<double> band_edges;  // kNumChannels + 1, ascending, Hz
  std::vector<double> centers;     // kNumChannels, Hz
  Matrix weights;                  // kNumChannels x (fft_size / 2 + 1)
  double sample_rate = audio::kPipelineSampleRate;
  std::size_t fft_size = 0;

  std::size_t num_channels() const { return weights.rows(); }
  std::size_t num_bins() const { return weights.cols(); }
};

// Throws std::invalid_argument if fft_size is not a power of two, the band
// exceeds Nyquist, or some channel ends up without any positive-weight bin.
FilterBank build_filterbank(std::size_t fft_size = 256,
                            double sample_rate = audio::kPipelineSampleRate);

struct CiFeatureSequence {
  Matrix features;  // T x 22, nonnegative
  double frame_rate = 0.0;

  std::size_t num_frames() const { return features.rows(); }
};

// features = spectrogram x weights^T.
CiFeatureSequence extract_features(const dsp::PowerSpectrogram& spec, const FilterBank& fb);

// Audio straight to CI features with the default front-end.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(dsp::WindowConfig cfg = {},
                            double pre_emphasis = dsp::kDefaultPreEmphasis);

  dsp::PowerSpectrogram spectrogram(const audio::AudioSignal& signal) const;
  CiFeatureSequence features(const audio::AudioSignal& signal) const;
  CiFeatureSequence features(const dsp::PowerSpectrogram& spec) const;

  const dsp::WindowConfig& window() const { return cfg_; }
  const FilterBank& filterbank() const { return fb_; }

 private:
  dsp::WindowConfig cfg_;
  double pre_emphasis_;
  FilterBank fb_;
};

struct Electrodogram {
  Matrix stimulation;  // T x 22; unselected channels are exactly 0
};

// Keeps the n largest strictly positive channels of every frame. Ties go to
// the lower channel index.
Electrodogram select_n_of_m(const CiFeatureSequence& feat, std::size_t n = kDefaultSelected);

// CSV with header "frame,channel,energy", one row per nonzero entry,
// channels 1-indexed.
void write_electrodogram_csv(const std::filesystem::path& path, const Electrodogram& e);
// num_frames = 0 sizes the result from the largest frame index present.
Electrodogram read_electrodogram_csv(const std::filesystem::path& path,
                                     std::size_t num_frames = 0,
                                     std::size_t num_channels = kNumChannels);

// Grey-level PNG: time on x, electrode 1 at the bottom, brightness = energy.
void write_electrodogram_png(const std::filesystem::path& path, const Electrodogram& e);

// Writes <prefix>.csv and <prefix>.png.
void render_electrodogram(const Electrodogram& e, const std::filesystem::path& prefix);

}  // namespace cise::ci

#endif  // CISE_CI_FEATURES_H_
