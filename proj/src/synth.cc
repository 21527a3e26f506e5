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

#include "cise/synth.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace cise::synth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpeechRms = 0.05;
constexpr double kNoiseRms = 0.1;
constexpr double kMaxPeak = 0.95;

// Distribution helpers on raw engine output so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  double process(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

Biquad lowpass_section(double cutoff_hz, double q, double sample_rate) {
  const double w0 = 2.0 * kPi * cutoff_hz / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad s{};
  s.b0 = (1.0 - c) / 2.0 / a0;
  s.b1 = (1.0 - c) / a0;
  s.b2 = s.b0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

void normalize_rms(std::vector<double>& x, double rms, double max_peak) {
  const double p = audio::mean_square(x);
  if (p <= 0.0) return;
  double g = rms / std::sqrt(p);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak * g > max_peak) g = max_peak / peak;
  for (double& v : x) v *= g;
}

struct ToneComplex {
  double f0, glide, am_hz, am_phase, level;
  std::vector<double> amp;
  std::vector<std::complex<double>> phase;  // per-harmonic phase offsets
};

}  // namespace

audio::AudioSignal speech_like(std::uint64_t seed, int sample_rate) {
  Rng rng(seed);
  const double fs = sample_rate;
  const double duration = rng.uniform(1.0, 3.0);
  const auto n = static_cast<std::size_t>(duration * fs);

  // Voicing gate: raised-cosine ramped segments after a leading silence.
  std::vector<double> gate(n, 0.0);
  const double ramp = 0.015;
  double t = rng.uniform(0.15, 0.3);
  const double end = duration - 0.1;
  while (t < end - 0.15) {
    const double seg = std::min(rng.uniform(0.2, 0.6), end - t);
    const auto s0 = static_cast<std::size_t>(t * fs);
    const auto s1 = std::min(n, static_cast<std::size_t>((t + seg) * fs));
    for (std::size_t i = s0; i < s1; ++i) {
      const double rel = (static_cast<double>(i) / fs) - t;
      const double rem = t + seg - static_cast<double>(i) / fs;
      double g = 1.0;
      if (rel < ramp) g = 0.5 - 0.5 * std::cos(kPi * rel / ramp);
      if (rem < ramp) g = std::min(g, 0.5 - 0.5 * std::cos(kPi * rem / ramp));
      gate[i] = g;
    }
    t += seg + rng.uniform(0.05, 0.25);
  }

  const int n_complex = rng.integer(2, 4);
  std::vector<ToneComplex> complexes(static_cast<std::size_t>(n_complex));
  for (auto& c : complexes) {
    c.f0 = rng.uniform(90.0, 280.0);
    c.glide = rng.uniform(-0.1, 0.1);
    c.am_hz = rng.uniform(3.0, 8.0);
    c.am_phase = rng.uniform(0.0, 2.0 * kPi);
    c.level = rng.uniform(0.5, 1.0);
    const int harmonics = static_cast<int>(7500.0 / (c.f0 * (1.0 + std::abs(c.glide))));
    for (int h = 1; h <= harmonics; ++h) {
      c.amp.push_back(1.0 / h);
      c.phase.push_back(std::polar(1.0, rng.uniform(0.0, 2.0 * kPi)));
    }
  }

  audio::AudioSignal out;
  out.sample_rate = sample_rate;
  out.samples.assign(n, 0.0);
  for (const auto& c : complexes) {
    double phi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double time = static_cast<double>(i) / fs;
      const double f = c.f0 * (1.0 + c.glide * time / duration);
      phi += 2.0 * kPi * f / fs;
      if (gate[i] == 0.0) continue;
      const std::complex<double> step = std::polar(1.0, phi);
      std::complex<double> z = 1.0;
      double acc = 0.0;
      for (std::size_t h = 0; h < c.amp.size(); ++h) {
        z *= step;
        acc += c.amp[h] * (z * c.phase[h]).imag();
      }
      const double am = 0.5 * (1.0 + 0.9 * std::sin(2.0 * kPi * c.am_hz * time + c.am_phase));
      out.samples[i] += gate[i] * c.level * am * acc;
    }
  }
  normalize_rms(out.samples, kSpeechRms, kMaxPeak);
  return out;
}

std::vector<CarNoiseSpec> default_noises() {
  return {
      {"car1", 500.0, 0.0, 0.2},
      {"car2", 350.0, 0.5, 0.25},
  };
}

audio::AudioSignal car_noise(const CarNoiseSpec& spec, double seconds, std::uint64_t seed,
                             int sample_rate) {
  if (!(seconds > 0.0)) throw std::invalid_argument("car_noise: duration must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(seconds * sample_rate);
  constexpr int kOrder = 8;
  std::vector<Biquad> sections;
  for (int k = 1; k <= kOrder / 2; ++k) {
    const double q = 1.0 / (2.0 * std::sin((2.0 * k - 1.0) * kPi / (2.0 * kOrder)));
    sections.push_back(lowpass_section(spec.cutoff_hz, q, sample_rate));
  }
  // Let the filter settle before recording.
  const std::size_t warmup = static_cast<std::size_t>(sample_rate / 10);
  const double drift_phase = rng.uniform(0.0, 2.0 * kPi);
  audio::AudioSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n + warmup; ++i) {
    double v = rng.gaussian();
    for (auto& s : sections) v = s.process(v);
    if (i < warmup) continue;
    const double time = static_cast<double>(i - warmup) / sample_rate;
    const double drift =
        1.0 + spec.drift_depth * std::sin(2.0 * kPi * spec.drift_hz * time + drift_phase);
    out.samples[i - warmup] = v * drift;
  }
  normalize_rms(out.samples, kNoiseRms, kMaxPeak);
  return out;
}

double energy_fraction_below(const audio::AudioSignal& signal, double cutoff_hz) {
  const int n = static_cast<int>(signal.size());
  if (n == 0) throw std::invalid_argument("energy_fraction_below: empty signal");
  std::vector<double> in(signal.samples);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  double below = 0.0, total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    // Interior bins stand for a conjugate pair.
    const bool single = k == 0 || (n % 2 == 0 && k == out.size() - 1);
    const double e = std::norm(out[k]) * (single ? 1.0 : 2.0);
    total += e;
    if (static_cast<double>(k) * signal.sample_rate / n < cutoff_hz) below += e;
  }
  return total > 0.0 ? below / total : 0.0;
}

SynthCorpus synth_corpus(const std::filesystem::path& root, std::size_t n_utts,
                         std::uint64_t seed, const audio::SplitRatios& ratios) {
  if (n_utts < 10) throw std::invalid_argument("synth_corpus: need at least 10 utterances");
  std::error_code ec;
  std::filesystem::create_directories(root / "speech", ec);
  std::filesystem::create_directories(root / "noise", ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());

  SynthCorpus corpus;
  corpus.root = root;
  std::vector<audio::ManifestEntry> entries;
  for (std::size_t i = 0; i < n_utts; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "utt_%04zu", i);
    const std::string rel = std::string("speech/") + id + ".wav";
    audio::store_wav(root / rel, speech_like(derive_seed(seed, {0x5be3ULL, i})));
    entries.push_back({id, rel, audio::Split::kTrain});
  }
  const auto noises = default_noises();
  for (std::size_t k = 0; k < noises.size(); ++k) {
    const auto path = root / "noise" / (noises[k].name + ".wav");
    audio::store_wav(path, car_noise(noises[k], kNoiseSeconds, derive_seed(seed, {0x401eULL, k})));
    corpus.noises.push_back(path);
  }
  corpus.manifest = root / "manifest.tsv";
  audio::write_manifest(corpus.manifest,
                        audio::split_manifest(std::move(entries), ratios, seed));
  return corpus;
}

}  // namespace cise::synth
