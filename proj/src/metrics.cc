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

#include "cise/metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cise::metrics {
namespace {

// Index into [0, n) mirrored about the end samples (no edge repeat), valid
// for any offset even when the pad is longer than the signal.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

std::vector<double> envelope_filter(double frame_rate, std::size_t taps, double cutoff_hz) {
  if (taps % 2 == 0 || taps < 3) throw std::invalid_argument("envelope_filter: odd taps >= 3");
  if (!(frame_rate > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= frame_rate / 2.0) {
    throw std::invalid_argument("envelope_filter: cutoff must be in (0, frame_rate / 2)");
  }
  const double fc = cutoff_hz / frame_rate;  // cycles per frame
  const double mid = static_cast<double>(taps - 1) / 2.0;
  const double denom = static_cast<double>(taps - 1);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double m = static_cast<double>(n) - mid;
    const double sinc = m == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(n) / denom;
    const double w = 0.42 - 0.5 * std::cos(ph) + 0.08 * std::cos(2.0 * ph);
    h[n] = sinc * w;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> lowpass_envelope(std::span<const double> x, std::span<const double> taps) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  if (n == 0) return y;
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < taps.size(); ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
      acc += taps[j] * x[reflect(src, n)];
    }
    y[t] = acc;
  }
  return y;
}

double envelope_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("envelope_correlation: length mismatch");
  const bool ca = is_constant(a), cb = is_constant(b);
  if (ca && cb) return 1.0;
  if (ca || cb) return 0.0;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return (saa <= 0.0 && sbb <= 0.0) ? 1.0 : 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

EcmScore ecm(const Matrix& clean, const Matrix& processed, double frame_rate) {
  require_same_shape(clean, processed, "ecm");
  if (clean.rows() < kMinEcmFrames) {
    throw std::invalid_argument("ecm: need at least " + std::to_string(kMinEcmFrames) +
                                " frames, got " + std::to_string(clean.rows()));
  }
  if (!clean.all_finite() || !processed.all_finite()) {
    throw std::invalid_argument("ecm: non-finite features");
  }
  const std::vector<double> taps = envelope_filter(frame_rate);
  const std::size_t frames = clean.rows(), channels = clean.cols();
  EcmScore score;
  score.per_channel.resize(channels);
  std::vector<double> a(frames), b(frames);
  double acc = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < frames; ++t) {
      a[t] = clean(t, c);
      b[t] = processed(t, c);
    }
    const double rho =
        envelope_correlation(lowpass_envelope(a, taps), lowpass_envelope(b, taps));
    score.per_channel[c] = rho;
    const double r = std::max(rho, 0.0);
    acc += r * r;
  }
  score.value = std::clamp(acc / static_cast<double>(channels), 0.0, 1.0);
  return score;
}

EcmScore ecm(const ci::CiFeatureSequence& clean, const ci::CiFeatureSequence& processed) {
  return ecm(clean.features, processed.features, clean.frame_rate);
}

double mean_of(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("mean_ecm: empty list");
  double acc = 0.0;
  for (double s : scores) acc += s;
  return acc / static_cast<double>(scores.size());
}

double mean_ecm(std::span<const std::pair<ci::CiFeatureSequence, ci::CiFeatureSequence>> pairs) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [clean, processed] : pairs) scores.push_back(ecm(clean, processed).value);
  return mean_of(scores);
}

double feature_mse(const Matrix& clean, const Matrix& processed) {
  require_same_shape(clean, processed, "feature_mse");
  if (clean.empty()) throw std::invalid_argument("feature_mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = std::log1p(processed.values()[i]) - std::log1p(clean.values()[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(clean.size());
}

}  // namespace cise::metrics
