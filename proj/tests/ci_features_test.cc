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
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"

namespace cise::ci {
namespace {

using testing::TempDir;

dsp::PowerSpectrogram random_spectrogram(std::size_t frames, std::mt19937_64& rng) {
  dsp::PowerSpectrogram s;
  s.frame_rate = 800.0;
  s.frames = testing::random_matrix(frames, 129, rng, 0.0, 2.0);
  return s;
}

TEST_CASE("band edges are log spaced from 250 to 8000 Hz") {
  const FilterBank fb = build_filterbank();
  REQUIRE(fb.band_edges.size() == 23);
  CHECK(fb.band_edges.front() == 250.0);
  CHECK(fb.band_edges.back() == 8000.0);
  const double ratio = std::pow(32.0, 1.0 / 22.0);
  CHECK(ratio == doctest::Approx(1.1705).epsilon(1e-4));
  for (std::size_t i = 0; i < 22; ++i) {
    CHECK(fb.band_edges[i + 1] > fb.band_edges[i]);
    CHECK(fb.band_edges[i + 1] / fb.band_edges[i] == doctest::Approx(ratio).epsilon(1e-12));
  }
}

TEST_CASE("filterbank weights") {
  const FilterBank fb = build_filterbank();
  REQUIRE(fb.num_channels() == 22);
  REQUIRE(fb.num_bins() == 129);
  for (std::size_t c = 0; c < 22; ++c) {
    double row_max = 0.0;
    for (std::size_t k = 0; k < 129; ++k) {
      CHECK(fb.weights(c, k) >= 0.0);
      CHECK(fb.weights(c, k) <= 1.0);
      row_max = std::max(row_max, fb.weights(c, k));
    }
    CHECK(row_max > 0.0);
  }
  for (std::size_t k = 0; k < 129; ++k) {
    const double hz = k * 16000.0 / 256.0;
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < 22; ++c) {
      if (fb.weights(c, k) > 0.0) active.push_back(c);
    }
    CHECK(active.size() <= 2);
    if (active.size() == 2) CHECK(active[1] == active[0] + 1);
    if (hz >= 250.0 && hz <= 8000.0) CHECK(!active.empty());
  }
}

TEST_CASE("filterbank rejects unusable FFT sizes") {
  CHECK_THROWS_AS(build_filterbank(200), std::invalid_argument);
  CHECK_THROWS_AS(build_filterbank(64), std::invalid_argument);
  CHECK_THROWS_AS(build_filterbank(256, 8000.0), std::invalid_argument);
  CHECK_NOTHROW(build_filterbank(512));
}

TEST_CASE("extract_features matches a nested-loop oracle") {
  const FilterBank fb = build_filterbank();
  std::mt19937_64 rng(8);
  const auto spec = random_spectrogram(40, rng);
  const auto feat = extract_features(spec, fb);
  REQUIRE(feat.num_frames() == 40);
  CHECK(feat.frame_rate == 800.0);
  for (std::size_t t = 0; t < 40; ++t) {
    for (std::size_t c = 0; c < 22; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 129; ++k) acc += spec.frames(t, k) * fb.weights(c, k);
      CHECK(std::abs(feat.features(t, c) - acc) <= 1e-12 * std::max(1.0, acc));
    }
  }
}

TEST_CASE("extract_features basics") {
  const FilterBank fb = build_filterbank();
  dsp::PowerSpectrogram zero{Matrix(5, 129), 800.0};
  const auto zf = extract_features(zero, fb);
  for (double v : zf.features.values()) CHECK(v == 0.0);

  // 250 Hz belongs to channel 1 alone and 8000 Hz to channel 22 alone.
  for (auto [bin, channel] : {std::pair<std::size_t, std::size_t>{4, 0}, {128, 21}}) {
    dsp::PowerSpectrogram s{Matrix(1, 129), 800.0};
    s.frames(0, bin) = 3.0;
    const auto f = extract_features(s, fb).features;
    for (std::size_t c = 0; c < 22; ++c) {
      if (c == channel) {
        CHECK(f(0, c) > 0.0);
      } else {
        CHECK(f(0, c) == 0.0);
      }
    }
  }

  dsp::PowerSpectrogram wrong{Matrix(1, 65), 800.0};
  CHECK_THROWS_AS(extract_features(wrong, fb), std::invalid_argument);
}

TEST_CASE("extract_features is linear") {
  const FilterBank fb = build_filterbank();
  std::mt19937_64 rng(12);
  const auto x = random_spectrogram(20, rng);
  const auto y = random_spectrogram(20, rng);
  const double a = 0.7, b = 2.3;
  dsp::PowerSpectrogram mix{Matrix(20, 129), 800.0};
  for (std::size_t i = 0; i < mix.frames.size(); ++i) {
    mix.frames.values()[i] = a * x.frames.values()[i] + b * y.frames.values()[i];
  }
  const auto fx = extract_features(x, fb).features;
  const auto fy = extract_features(y, fb).features;
  const auto fm = extract_features(mix, fb).features;
  for (std::size_t i = 0; i < fm.size(); ++i) {
    const double expect = a * fx.values()[i] + b * fy.values()[i];
    CHECK(std::abs(fm.values()[i] - expect) <= 1e-9 * std::abs(expect));
  }
}

TEST_CASE("feature extractor on audio") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  audio::AudioSignal s;
  s.samples.resize(16000);
  for (auto& v : s.samples) v = u(rng);
  const FeatureExtractor fx;
  const auto f = fx.features(s);
  CHECK(f.num_frames() == 793);
  CHECK(f.features.cols() == 22);
  CHECK(f.frame_rate == 800.0);
  for (double v : f.features.values()) CHECK((v >= 0.0 && std::isfinite(v)));
  CHECK(fx.features(fx.spectrogram(s)).features == f.features);
}

CiFeatureSequence single_frame(std::vector<double> v) {
  CiFeatureSequence f;
  f.frame_rate = 800.0;
  const std::size_t n = v.size();
  f.features = Matrix(1, n, std::move(v));
  return f;
}

std::vector<std::size_t> selected(const Electrodogram& e, std::size_t t = 0) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < e.stimulation.cols(); ++c) {
    if (e.stimulation(t, c) != 0.0) out.push_back(c + 1);
  }
  return out;
}

TEST_CASE("n-of-m examples") {
  std::vector<double> desc(22);
  for (std::size_t c = 0; c < 22; ++c) desc[c] = 22.0 - static_cast<double>(c);
  CHECK(selected(select_n_of_m(single_frame(desc))) ==
        std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(selected(select_n_of_m(single_frame(std::vector<double>(22, 0.5)))) ==
        std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});

  std::vector<double> sparse(22, 0.0);
  sparse[4] = 1.0;
  sparse[10] = 2.0;
  sparse[20] = 0.5;
  const auto e = select_n_of_m(single_frame(sparse));
  CHECK(selected(e) == std::vector<std::size_t>{5, 11, 21});
  CHECK(e.stimulation(0, 10) == 2.0);
  CHECK(selected(select_n_of_m(single_frame(std::vector<double>(22, 0.0)))).empty());
}

TEST_CASE("n-of-m properties on random frames") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CiFeatureSequence f;
  f.frame_rate = 800.0;
  f.features = Matrix(1000, 22);
  for (std::size_t t = 0; t < 1000; ++t) {
    for (std::size_t c = 0; c < 22; ++c) {
      const double r = u(rng);
      f.features(t, c) = r < 0.3 ? 0.0 : (r < 0.4 ? 0.5 : u(rng));
    }
    if (t % 7 == 0) {
      for (std::size_t c = 0; c < 22; ++c) f.features(t, c) = (c < 5 ? u(rng) : 0.0);
    }
  }
  const Electrodogram e = select_n_of_m(f);
  CiFeatureSequence scaled = f;
  const double c = 3.7e4;
  for (auto& v : scaled.features.values()) v *= c;
  const Electrodogram es = select_n_of_m(scaled);
  for (std::size_t t = 0; t < 1000; ++t) {
    std::size_t positive = 0;
    for (std::size_t ch = 0; ch < 22; ++ch) positive += f.features(t, ch) > 0.0;
    const auto sel = selected(e, t);
    CHECK(sel.size() == std::min<std::size_t>(8, positive));
    CHECK(selected(es, t) == sel);
    // Every kept channel is at least as large as every dropped one.
    double min_kept = 1e300, max_dropped = 0.0;
    for (std::size_t ch = 0; ch < 22; ++ch) {
      if (e.stimulation(t, ch) != 0.0) {
        CHECK(e.stimulation(t, ch) == f.features(t, ch));
        min_kept = std::min(min_kept, f.features(t, ch));
      } else {
        max_dropped = std::max(max_dropped, f.features(t, ch));
      }
    }
    if (!sel.empty()) CHECK(min_kept >= max_dropped);
  }
}

TEST_CASE("electrodogram CSV") {
  TempDir dir("electro");
  Electrodogram empty{Matrix(10, 22)};
  write_electrodogram_csv(dir / "empty.csv", empty);
  CHECK(testing::slurp(dir / "empty.csv") == "frame,channel,energy\n");

  Electrodogram one{Matrix(10, 22)};
  one.stimulation(5, 2) = 1.0;
  write_electrodogram_csv(dir / "one.csv", one);
  CHECK(testing::slurp(dir / "one.csv") == "frame,channel,energy\n5,3,1.0\n");

  std::mt19937_64 rng(4);
  CiFeatureSequence f;
  f.frame_rate = 800.0;
  f.features = testing::random_matrix(50, 22, rng, 0.0, 1e3);
  const Electrodogram e = select_n_of_m(f);
  render_electrodogram(e, dir / "rt");
  CHECK(std::filesystem::file_size(dir / "rt.png") > 0);
  CHECK(read_electrodogram_csv(dir / "rt.csv", 50).stimulation == e.stimulation);
}

}  // namespace
}  // namespace cise::ci
