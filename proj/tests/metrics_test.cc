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

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"

namespace cise::metrics {
namespace {

using testing::random_matrix;

// Independent reference: explicit mirrored padding, direct filter, Pearson
// correlation from long-double covariances.
std::vector<double> reference_taps(double rate) {
  const int n = 127;
  std::vector<double> h(n);
  long double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double m = i - 63;
    const double x = 2.0 * 20.0 / rate * m;
    const double sinc = m == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double w = 0.42 - 0.5 * std::cos(2 * std::numbers::pi * i / 126.0) +
                     0.08 * std::cos(4 * std::numbers::pi * i / 126.0);
    h[i] = sinc * w;
    sum += h[i];
  }
  for (auto& v : h) v = static_cast<double>(v / sum);
  return h;
}

std::vector<double> reference_filter(const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t n = x.size(), half = h.size() / 2;
  // Mirror repeatedly until the pad is long enough.
  std::vector<double> ext(x);
  if (n == 1) ext.assign(1 + 2 * half, x[0]);
  while (ext.size() < n + 2 * half) {
    std::vector<double> grown;
    for (std::size_t i = ext.size() - 1; i >= 1; --i) grown.push_back(ext[i]);
    grown.insert(grown.end(), ext.begin(), ext.end());
    for (std::size_t i = ext.size() - 1; i-- > 0;) grown.push_back(ext[i]);
    ext = std::move(grown);
  }
  const std::size_t start = (ext.size() - n) / 2 - half;
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * ext[start + t + j];
    y[t] = acc;
  }
  return y;
}

double reference_ecm(const Matrix& a, const Matrix& b, double rate) {
  const auto h = reference_taps(rate);
  double acc = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    std::vector<double> xa(a.rows()), xb(a.rows());
    for (std::size_t t = 0; t < a.rows(); ++t) {
      xa[t] = a(t, c);
      xb[t] = b(t, c);
    }
    const auto fa = reference_filter(xa, h), fb = reference_filter(xb, h);
    long double ma = 0, mb = 0;
    for (std::size_t t = 0; t < fa.size(); ++t) {
      ma += fa[t];
      mb += fb[t];
    }
    ma /= fa.size();
    mb /= fb.size();
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t t = 0; t < fa.size(); ++t) {
      sab += (fa[t] - ma) * (fb[t] - mb);
      saa += (fa[t] - ma) * (fa[t] - ma);
      sbb += (fb[t] - mb) * (fb[t] - mb);
    }
    const double rho = static_cast<double>(sab / std::sqrt(saa * sbb));
    acc += rho > 0 ? rho * rho : 0.0;
  }
  return acc / static_cast<double>(a.cols());
}

TEST_CASE("envelope filter") {
  const auto h = envelope_filter(800.0);
  REQUIRE(h.size() == 127);
  double sum = 0.0;
  for (double v : h) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < 127; ++i) CHECK(h[i] == doctest::Approx(h[126 - i]).epsilon(1e-14));
  const auto ref = reference_taps(800.0);
  for (std::size_t i = 0; i < 127; ++i) CHECK(std::abs(h[i] - ref[i]) < 1e-15);
  // Gain at 100 Hz is far below the passband.
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < 127; ++i) {
    re += h[i] * std::cos(2 * std::numbers::pi * 100.0 / 800.0 * i);
    im += h[i] * std::sin(2 * std::numbers::pi * 100.0 / 800.0 * i);
  }
  CHECK(std::hypot(re, im) < 1e-3);
  CHECK_THROWS_AS(envelope_filter(800.0, 128), std::invalid_argument);
  CHECK_THROWS_AS(envelope_filter(30.0), std::invalid_argument);
}

TEST_CASE("reflection-padded filtering matches the reference") {
  std::mt19937_64 rng(1);
  const auto h = envelope_filter(800.0);
  for (std::size_t n : {1u, 2u, 5u, 40u, 63u, 64u, 300u}) {
    const Matrix x = random_matrix(n, 1, rng);
    const auto a = lowpass_envelope(x.values(), h);
    const auto b = reference_filter(x.values(), h);
    for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(a[t] - b[t]) < 1e-12);
  }
}

TEST_CASE("ECM examples") {
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(200, 22, rng, 0.0, 1.0);
  CHECK(ecm(x, x, 800.0).value == 1.0);

  Matrix anti(200, 22);
  for (std::size_t t = 0; t < 200; ++t) {
    for (std::size_t c = 0; c < 22; ++c) anti(t, c) = -x(t, c) + 3.0 + c;
  }
  CHECK(ecm(x, anti, 800.0).value == 0.0);

  Matrix noisy = x;
  std::normal_distribution<double> n(0.0, 0.29);
  for (auto& v : noisy.values()) v += n(rng);
  const double got = ecm(noisy, x, 800.0).value;
  CHECK(std::abs(got - reference_ecm(noisy, x, 800.0)) < 1e-12);
  CHECK(got > 0.0);
  CHECK(got < 1.0);
}

TEST_CASE("ECM zero-variance conventions") {
  std::mt19937_64 rng(3);
  Matrix a = random_matrix(64, 22, rng, 0.0, 1.0);
  Matrix b = a;
  for (std::size_t t = 0; t < 64; ++t) {
    a(t, 0) = 2.0;
    b(t, 0) = 5.0;  // both constant: rho = 1
    b(t, 1) = 0.0;  // one constant: rho = 0
  }
  const EcmScore s = ecm(a, b, 800.0);
  CHECK(s.per_channel[0] == 1.0);
  CHECK(s.per_channel[1] == 0.0);
  CHECK(s.value == doctest::Approx(21.0 / 22.0).epsilon(1e-12));
  const Matrix zeros(64, 22);
  CHECK(ecm(zeros, zeros, 800.0).value == 1.0);
}

TEST_CASE("ECM range and affine invariance") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 10.0), off(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t T = 32 + rng() % 100;
    const Matrix a = random_matrix(T, 22, rng, 0.0, 1.0);
    const Matrix b = random_matrix(T, 22, rng, 0.0, 1.0);
    const double v = ecm(a, b, 800.0).value;
    CHECK((v >= 0.0 && v <= 1.0));
  }
  for (int i = 0; i < 50; ++i) {
    const Matrix clean = random_matrix(120, 22, rng, 0.0, 1.0);
    Matrix proc = clean;
    for (auto& v : proc.values()) v += 0.5 * u(rng) / 10.0;
    Matrix affine = proc;
    for (std::size_t c = 0; c < 22; ++c) {
      const double scale = u(rng), shift = off(rng);
      for (std::size_t t = 0; t < 120; ++t) affine(t, c) = scale * proc(t, c) + shift;
    }
    CHECK(std::abs(ecm(clean, proc, 800.0).value - ecm(clean, affine, 800.0).value) < 1e-9);
  }
}

TEST_CASE("ECM input checks") {
  CHECK_THROWS_AS(ecm(Matrix(31, 22), Matrix(31, 22), 800.0), std::invalid_argument);
  CHECK_THROWS_AS(ecm(Matrix(40, 22), Matrix(41, 22), 800.0), std::invalid_argument);
  Matrix bad(40, 22);
  bad(3, 3) = std::nan("");
  CHECK_THROWS_AS(ecm(bad, Matrix(40, 22), 800.0), std::invalid_argument);
}

TEST_CASE("mean ECM") {
  std::mt19937_64 rng(5);
  ci::CiFeatureSequence a{random_matrix(80, 22, rng, 0.0, 1.0), 800.0};
  ci::CiFeatureSequence b{random_matrix(80, 22, rng, 0.0, 1.0), 800.0};
  const double single = ecm(a, b).value;
  std::vector<std::pair<ci::CiFeatureSequence, ci::CiFeatureSequence>> pairs = {{a, b}};
  CHECK(mean_ecm(pairs) == single);
  pairs.push_back({a, b});
  CHECK(mean_ecm(pairs) == doctest::Approx(single).epsilon(1e-15));
  const std::vector<double> scores = {1.0, 0.0};
  CHECK(mean_of(scores) == 0.5);
  CHECK_THROWS_AS(mean_of(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("feature MSE") {
  std::mt19937_64 rng(6);
  const Matrix a = random_matrix(10, 22, rng, 0.0, 3.0);
  CHECK(feature_mse(a, a) == 0.0);
  Matrix zero(10, 22);
  Matrix bumped = zero;
  bumped(4, 7) = std::exp(1.0) - 1.0;
  CHECK(feature_mse(zero, bumped) == doctest::Approx(1.0 / 220.0).epsilon(1e-12));
  const Matrix b = random_matrix(10, 22, rng, 0.0, 3.0);
  double acc = 0.0;
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t c = 0; c < 22; ++c) {
      const double d = std::log(1.0 + a(t, c)) - std::log(1.0 + b(t, c));
      acc += d * d;
    }
  }
  CHECK(std::abs(feature_mse(a, b) - acc / 220.0) < 1e-12);
  CHECK_THROWS_AS(feature_mse(a, Matrix(3, 3)), std::invalid_argument);
}

}  // namespace
}  // namespace cise::metrics
