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

// Classical single-channel enhancement baselines operating on FFT power
// spectra: noise PSD tracking, power spectral subtraction, decision-directed
// Wiener filtering and the log-spectral amplitude MMSE estimator.

#ifndef CISE_CLASSIC_SE_H_
#define CISE_CLASSIC_SE_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cise/common.h"
#include "cise/dsp.h"

namespace cise::classic {

struct NoiseTrackerConfig {
  double init_seconds = 0.1;   // leading frames averaged for the initial estimate
  double smoothing = 0.98;     // recursive smoothing constant
  double gate = 1.5;           // update only if frame power < gate * noise power
  double floor_ratio = 1e-12;  // psd floor relative to the loudest bin
  std::size_t min_frames = 10;
};

struct NoiseEstimate {
  std::vector<double> psd;  // fft_size / 2 + 1 values
  NoiseTrackerConfig params;
};

// Initial estimate from the first init_seconds of frames, then recursive
// smoothing on frames quiet enough to be noise only.
NoiseEstimate estimate_noise(const dsp::PowerSpectrogram& noisy,
                             const NoiseTrackerConfig& cfg = {});

// max(y - alpha * n, beta * y) per bin.
std::vector<double> spectral_subtract(std::span<const double> noisy_psd,
                                      const NoiseEstimate& noise, double alpha = 1.0,
                                      double beta = 0.002);
dsp::PowerSpectrogram spectral_subtract(const dsp::PowerSpectrogram& noisy,
                                        const NoiseEstimate& noise, double alpha = 1.0,
                                        double beta = 0.002);

struct DecisionDirectedConfig {
  double smoothing = 0.98;     // weight of the previous frame's estimate
  double xi_floor_db = -25.0;  // a priori SNR floor
};

// E1(v) = integral_v^inf exp(-t) / t dt for v > 0.
double expint_e1(double v);

double wiener_gain(double xi);
// Amplitude gain (xi / (1 + xi)) * exp(E1(v) / 2), v = xi * gamma / (1 + xi).
double logmmse_gain(double xi, double gamma);

// Both estimators apply G^2 to the noisy power. When `gains` is non-null it
// receives the per-frame, per-bin amplitude gains.
dsp::PowerSpectrogram wiener_as(const dsp::PowerSpectrogram& noisy, const NoiseEstimate& noise,
                                const DecisionDirectedConfig& cfg = {}, Matrix* gains = nullptr);
dsp::PowerSpectrogram logmmse(const dsp::PowerSpectrogram& noisy, const NoiseEstimate& noise,
                              const DecisionDirectedConfig& cfg = {}, Matrix* gains = nullptr);

// Debug dump of a gain matrix, one row per frame.
void write_gains_csv(const std::filesystem::path& path, const Matrix& gains);

}  // namespace cise::classic

#endif  // CISE_CLASSIC_SE_H_
