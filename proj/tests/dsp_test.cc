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

#include "cise/dsp.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"

namespace cise::dsp {
namespace {

// Direct O(N^2) DFT power of a zero-padded frame.
std::vector<double> dft_power(std::span<const double> frame, std::size_t n) {
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < frame.size(); ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
      acc += frame[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::norm(acc);
  }
  return out;
}

audio::AudioSignal signal_of(std::vector<double> v) {
  audio::AudioSignal s;
  s.samples = std::move(v);
  return s;
}

TEST_CASE("hamming coefficients") {
  const auto w = hamming(160);
  REQUIRE(w.size() == 160);
  CHECK(w[0] == doctest::Approx(0.08));
  CHECK(w[159] == doctest::Approx(0.08));
  for (std::size_t n = 0; n < 160; ++n) {
    CHECK(w[n] == doctest::Approx(0.54 - 0.46 * std::cos(2 * std::numbers::pi * n / 159.0)));
    CHECK(std::abs(w[n] - w[159 - n]) < 1e-15);
  }
}

TEST_CASE("window config validation") {
  CHECK_NOTHROW(WindowConfig::Make(160, 20, 256));
  CHECK_THROWS_AS(WindowConfig::Make(160, 0, 256), std::invalid_argument);
  CHECK_THROWS_AS(WindowConfig::Make(160, 200, 256), std::invalid_argument);
  CHECK_THROWS_AS(WindowConfig::Make(300, 20, 256), std::invalid_argument);
}

TEST_CASE("pre-emphasis examples") {
  const auto x = signal_of({0.3, -0.2, 0.9, 0.1});
  CHECK(pre_emphasize(x, 0.0).samples == x.samples);
  const auto c = pre_emphasize(signal_of({1, 1, 1}), 0.97).samples;
  CHECK(c[0] == 1.0);
  CHECK(c[1] == doctest::Approx(0.03));
  CHECK(c[2] == doctest::Approx(0.03));
  const auto imp = pre_emphasize(signal_of({1, 0}), 0.97).samples;
  CHECK(imp[0] == 1.0);
  CHECK(imp[1] == -0.97);
  CHECK(pre_emphasize(signal_of({}), 0.97).samples.empty());
  CHECK_THROWS_AS(pre_emphasize(x, 1.0), std::invalid_argument);
}

TEST_CASE("pre-emphasis inverts exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(4000);
  for (auto& v : x) v = u(rng);
  const auto y = pre_emphasize(signal_of(x), 0.97).samples;
  std::vector<double> back(y.size());
  back[0] = y[0];
  for (std::size_t n = 1; n < y.size(); ++n) back[n] = y[n] + 0.97 * back[n - 1];
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(back[n] - x[n]) < 1e-12);
}

TEST_CASE("frame counts") {
  const WindowConfig cfg;
  CHECK(frame_and_window(signal_of(std::vector<double>(16000, 0.1)), cfg).rows() == 793);
  CHECK(frame_and_window(signal_of(std::vector<double>(160, 0.1)), cfg).rows() == 1);
  CHECK_THROWS_AS(frame_and_window(signal_of(std::vector<double>(159, 0.1)), cfg),
                  std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t win = 1 + rng() % 300;
    const std::size_t hop = 1 + rng() % win;
    const std::size_t len = win + rng() % 5000;
    std::size_t count = 0;
    for (std::size_t start = 0; start + win <= len; start += hop) ++count;
    CHECK(frame_count(len, win, hop) == count);
  }
}

TEST_CASE("constant signal frames equal the window") {
  const WindowConfig cfg;
  const Matrix f = frame_and_window(signal_of(std::vector<double>(1000, 1.0)), cfg);
  for (std::size_t t = 0; t < f.rows(); ++t) {
    for (std::size_t n = 0; n < 160; ++n) REQUIRE(f(t, n) == cfg.window[n]);
  }
}

TEST_CASE("frames cover the expected samples") {
  const WindowConfig cfg;
  std::vector<double> ramp(1000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 1000.0;
  const Matrix f = frame_and_window(signal_of(ramp), cfg);
  CHECK(f(3, 7) == ramp[3 * 20 + 7] * cfg.window[7]);
}

TEST_CASE("power spectrum of zero and DC frames") {
  const WindowConfig cfg;
  Matrix zero(2, 160);
  const auto z = power_spectrum(zero, cfg, 16000);
  CHECK(z.frames.cols() == 129);
  CHECK(z.frame_rate == 800.0);
  for (double v : z.frames.values()) CHECK(v == 0.0);

  Matrix dc(1, 160, 0.25);
  const auto s = power_spectrum(dc, cfg, 16000);
  const auto oracle = dft_power(dc.row(0), 256);
  CHECK(s.frames(0, 0) == doctest::Approx((0.25 * 160) * (0.25 * 160)).epsilon(1e-12));
  for (std::size_t k = 0; k < 129; ++k) {
    CHECK(std::abs(s.frames(0, k) - oracle[k]) <= 1e-9 * (oracle[0] + 1.0));
  }
}

TEST_CASE("FFT matches the direct DFT oracle") {
  const WindowConfig cfg;
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix frames = testing::random_matrix(3, 160, rng);
    const auto s = power_spectrum(frames, cfg, 16000);
    for (std::size_t t = 0; t < 3; ++t) {
      const auto oracle = dft_power(frames.row(t), 256);
      double peak = 0.0;
      for (double v : oracle) peak = std::max(peak, v);
      for (std::size_t k = 0; k < 129; ++k) {
        CHECK(std::abs(s.frames(t, k) - oracle[k]) <= 1e-9 * peak);
      }
    }
  }
  // Full 256-point frames.
  const WindowConfig full = WindowConfig::Make(256, 64, 256);
  const Matrix frames = testing::random_matrix(4, 256, rng);
  const auto s = power_spectrum(frames, full, 16000);
  for (std::size_t t = 0; t < 4; ++t) {
    const auto oracle = dft_power(frames.row(t), 256);
    for (std::size_t k = 0; k < 129; ++k) {
      CHECK(s.frames(t, k) == doctest::Approx(oracle[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("Parseval") {
  const WindowConfig cfg;
  std::mt19937_64 rng(21);
  const Matrix frames = testing::random_matrix(10, 160, rng);
  const auto s = power_spectrum(frames, cfg, 16000);
  for (std::size_t t = 0; t < 10; ++t) {
    double energy = 0.0;
    for (double v : frames.row(t)) energy += v * v;
    double bins = s.frames(t, 0) + s.frames(t, 128);
    for (std::size_t k = 1; k < 128; ++k) bins += 2.0 * s.frames(t, k);
    CHECK(bins == doctest::Approx(256.0 * energy).epsilon(1e-9));
  }
}

TEST_CASE("analyze composes the stages") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> x(2000);
  for (auto& v : x) v = u(rng);
  const WindowConfig cfg;
  const auto a = analyze(signal_of(x), cfg);
  const auto b = power_spectrum(frame_and_window(pre_emphasize(signal_of(x)), cfg), cfg, 16000);
  CHECK(a.frames == b.frames);
  for (double v : a.frames.values()) CHECK(v >= 0.0);
}

}  // namespace
}  // namespace cise::dsp
