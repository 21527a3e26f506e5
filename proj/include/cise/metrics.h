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

// Intelligibility scoring in CI feature space.
//
// ECM (envelope correlation measure): every channel's energy trajectory is
// low-pass filtered to its slow modulation envelope (127-tap linear-phase
// windowed sinc, 20 Hz cutoff at the 800 Hz frame rate, reflected edges).
// The Pearson correlation rho_c between the clean and processed envelopes is
// computed per channel, with rho_c = 1 when both envelopes are constant and
// rho_c = 0 when exactly one is. The score is the mean over channels of
// max(0, rho_c)^2, which lies in [0, 1].

#ifndef CISE_METRICS_H_
#define CISE_METRICS_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cise/ci_features.h"
#include "cise/common.h"

namespace cise::metrics {

inline constexpr std::size_t kEnvelopeTaps = 127;
inline constexpr double kEnvelopeCutoffHz = 20.0;
inline constexpr std::size_t kMinEcmFrames = 32;

struct EcmScore {
  double value = 0.0;
  std::vector<double> per_channel;  // rho_c before clamping
};

// Blackman-windowed sinc low-pass, unit DC gain.
std::vector<double> envelope_filter(double frame_rate, std::size_t taps = kEnvelopeTaps,
                                    double cutoff_hz = kEnvelopeCutoffHz);

// Same-length filtering of x with reflection padding at both ends.
std::vector<double> lowpass_envelope(std::span<const double> x, std::span<const double> taps);

// Pearson correlation with the zero-variance conventions described above.
double envelope_correlation(std::span<const double> a, std::span<const double> b);

EcmScore ecm(const ci::CiFeatureSequence& clean, const ci::CiFeatureSequence& processed);
EcmScore ecm(const Matrix& clean, const Matrix& processed, double frame_rate);

double mean_ecm(std::span<const std::pair<ci::CiFeatureSequence, ci::CiFeatureSequence>> pairs);
double mean_of(std::span<const double> scores);

// Mean squared difference of log(1 + energy).
double feature_mse(const Matrix& clean, const Matrix& processed);

}  // namespace cise::metrics

#endif  // CISE_METRICS_H_
