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

// Pre-emphasis, framing with a Hamming window and FFT power spectra.

#ifndef CISE_DSP_H_
#define CISE_DSP_H_

#include <cstddef>
#include <vector>

#include "cise/audio_io.h"
#include "cise/common.h"

namespace cise::dsp {

inline constexpr double kDefaultPreEmphasis = 0.97;

// Symmetric Hamming window, 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> hamming(std::size_t length);

struct WindowConfig {
  std::size_t window_len = 160;  // 10 ms at 16 kHz
  std::size_t hop = 20;          // 8.75 ms overlap
  std::size_t fft_size = 256;
  std::vector<double> window = hamming(160);

  static WindowConfig Make(std::size_t window_len, std::size_t hop, std::size_t fft_size);
  // Throws std::invalid_argument unless 0 < hop <= window_len <= fft_size.
  void validate() const;
  std::size_t num_bins() const { return fft_size / 2 + 1; }
};

struct PowerSpectrogram {
  Matrix frames;  // T x (fft_size / 2 + 1)
  double frame_rate = 0.0;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t num_bins() const { return frames.cols(); }
};

// y[0] = x[0], y[n] = x[n] - alpha x[n-1].
audio::AudioSignal pre_emphasize(const audio::AudioSignal& signal,
                                 double alpha = kDefaultPreEmphasis);

// floor((length - window_len) / hop) + 1, or 0 when the signal is too short.
std::size_t frame_count(std::size_t length, std::size_t window_len, std::size_t hop);

// T x window_len matrix of windowed frames; trailing partial frames dropped.
Matrix frame_and_window(const audio::AudioSignal& signal, const WindowConfig& cfg);

// Squared DFT magnitude of each zero-padded frame, bins 0..fft_size/2.
PowerSpectrogram power_spectrum(const Matrix& frames, const WindowConfig& cfg,
                                double sample_rate = audio::kPipelineSampleRate);

// pre_emphasize -> frame_and_window -> power_spectrum.
PowerSpectrogram analyze(const audio::AudioSignal& signal, const WindowConfig& cfg = {},
                         double pre_emphasis = kDefaultPreEmphasis);

// Debug dump, one row per frame.
void write_spectrogram_csv(const std::filesystem::path& path, const PowerSpectrogram& s);

}  // namespace cise::dsp

#endif  // CISE_DSP_H_
