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

#include "cise/classic_se.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cise::classic {
namespace {

constexpr double kMinLogMmseArg = 1e-12;

void require_bins(const dsp::PowerSpectrogram& noisy, const NoiseEstimate& noise) {
  if (noise.psd.size() != noisy.num_bins()) {
    throw std::invalid_argument("noise estimate has " + std::to_string(noise.psd.size()) +
                                " bins, spectrogram " + std::to_string(noisy.num_bins()));
  }
}

template <typename GainFn>
dsp::PowerSpectrogram decision_directed(const dsp::PowerSpectrogram& noisy,
                                        const NoiseEstimate& noise,
                                        const DecisionDirectedConfig& cfg, Matrix* gains,
                                        GainFn gain_fn) {
  require_bins(noisy, noise);
  const double a = cfg.smoothing;
  const double xi_min = std::pow(10.0, cfg.xi_floor_db / 10.0);
  const std::size_t bins = noisy.num_bins();
  std::vector<double> prev_gain(bins, 0.0), prev_gamma(bins, 0.0);

  dsp::PowerSpectrogram out;
  out.frame_rate = noisy.frame_rate;
  out.frames = Matrix(noisy.num_frames(), bins);
  if (gains != nullptr) *gains = Matrix(noisy.num_frames(), bins);
  for (std::size_t t = 0; t < noisy.num_frames(); ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double y = noisy.frames(t, k);
      const double gamma = y / noise.psd[k];
      double xi = a * prev_gain[k] * prev_gain[k] * prev_gamma[k] +
                  (1.0 - a) * std::max(gamma - 1.0, 0.0);
      xi = std::max(xi, xi_min);
      const double g = gain_fn(xi, gamma);
      out.frames(t, k) = g * g * y;
      if (gains != nullptr) (*gains)(t, k) = g;
      prev_gain[k] = g;
      prev_gamma[k] = gamma;
    }
  }
  return out;
}

}  // namespace

NoiseEstimate estimate_noise(const dsp::PowerSpectrogram& noisy, const NoiseTrackerConfig& cfg) {
  const std::size_t frames = noisy.num_frames();
  const std::size_t bins = noisy.num_bins();
  if (frames < cfg.min_frames) {
    throw std::invalid_argument("estimate_noise: need at least " +
                                std::to_string(cfg.min_frames) + " frames");
  }
  const double rate = noisy.frame_rate > 0.0 ? noisy.frame_rate : 1.0;
  const std::size_t n_init = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(cfg.init_seconds * rate)), 1, frames);

  NoiseEstimate est;
  est.params = cfg;
  est.psd.assign(bins, 0.0);
  for (std::size_t t = 0; t < n_init; ++t) {
    for (std::size_t k = 0; k < bins; ++k) est.psd[k] += noisy.frames(t, k);
  }
  for (double& p : est.psd) p /= static_cast<double>(n_init);

  double noise_power = std::accumulate(est.psd.begin(), est.psd.end(), 0.0);
  for (std::size_t t = n_init; t < frames; ++t) {
    auto row = noisy.frames.row(t);
    const double frame_power = std::accumulate(row.begin(), row.end(), 0.0);
    if (frame_power < cfg.gate * noise_power) {
      for (std::size_t k = 0; k < bins; ++k) {
        est.psd[k] = cfg.smoothing * est.psd[k] + (1.0 - cfg.smoothing) * row[k];
      }
      noise_power = std::accumulate(est.psd.begin(), est.psd.end(), 0.0);
    }
  }

  const auto& v = noisy.frames.values();
  const double peak = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  const double floor = std::max(cfg.floor_ratio * peak, std::numeric_limits<double>::min());
  for (double& p : est.psd) p = std::max(p, floor);
  return est;
}

std::vector<double> spectral_subtract(std::span<const double> noisy_psd,
                                      const NoiseEstimate& noise, double alpha, double beta) {
  if (noisy_psd.size() != noise.psd.size()) {
    throw std::invalid_argument("spectral_subtract: bin count mismatch");
  }
  if (alpha < 1.0 || !(beta > 0.0)) {
    throw std::invalid_argument("spectral_subtract: need alpha >= 1 and beta > 0");
  }
  std::vector<double> out(noisy_psd.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::max(noisy_psd[k] - alpha * noise.psd[k], beta * noisy_psd[k]);
  }
  return out;
}

dsp::PowerSpectrogram spectral_subtract(const dsp::PowerSpectrogram& noisy,
                                        const NoiseEstimate& noise, double alpha, double beta) {
  require_bins(noisy, noise);
  dsp::PowerSpectrogram out;
  out.frame_rate = noisy.frame_rate;
  out.frames = Matrix(noisy.num_frames(), noisy.num_bins());
  for (std::size_t t = 0; t < noisy.num_frames(); ++t) {
    const auto row = spectral_subtract(noisy.frames.row(t), noise, alpha, beta);
    std::copy(row.begin(), row.end(), out.frames.row(t).begin());
  }
  return out;
}

double expint_e1(double v) {
  if (!(v > 0.0)) throw std::domain_error("expint_e1: argument must be positive");
  if (std::isinf(v)) return 0.0;
  if (v < 1.0) {
    // -gamma - ln v - sum_{k>=1} (-v)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 100; ++k) {
      term *= -v / k;
      const double add = term / k;
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return -std::numbers::egamma - std::log(v) - sum;
  }
  // Modified Lentz evaluation of the continued fraction
  // E1(v) = exp(-v) / (v + 1 - 1 / (v + 3 - 4 / (v + 5 - ...))).
  constexpr double kTiny = 1e-300;
  double b = v + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-v);
}

double wiener_gain(double xi) { return xi / (1.0 + xi); }

double logmmse_gain(double xi, double gamma) {
  const double w = wiener_gain(xi);
  const double v = w * gamma;
  if (!(v > 0.0)) return w;
  if (std::isinf(v)) return w;
  return w * std::exp(0.5 * expint_e1(std::max(v, kMinLogMmseArg)));
}

dsp::PowerSpectrogram wiener_as(const dsp::PowerSpectrogram& noisy, const NoiseEstimate& noise,
                                const DecisionDirectedConfig& cfg, Matrix* gains) {
  return decision_directed(noisy, noise, cfg, gains,
                           [](double xi, double) { return wiener_gain(xi); });
}

dsp::PowerSpectrogram logmmse(const dsp::PowerSpectrogram& noisy, const NoiseEstimate& noise,
                              const DecisionDirectedConfig& cfg, Matrix* gains) {
  return decision_directed(noisy, noise, cfg, gains, logmmse_gain);
}

void write_gains_csv(const std::filesystem::path& path, const Matrix& gains) {
  write_matrix_csv(path, gains);
}

}  // namespace cise::classic
