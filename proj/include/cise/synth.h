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

// Synthetic stand-in corpus: speech-like harmonic complexes with syllabic
// amplitude modulation and pauses, and low-pass "car" noise.

#ifndef CISE_SYNTH_H_
#define CISE_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cise/audio_io.h"

namespace cise::synth {

// 1-3 s utterance: 150-300 ms leading silence, then voiced stretches of 2-4
// harmonic complexes (f0 90-280 Hz, 1/h harmonic amplitudes, 3-8 Hz
// amplitude modulation) separated by pauses. RMS 0.05, peak <= 0.95.
audio::AudioSignal speech_like(std::uint64_t seed,
                               int sample_rate = audio::kPipelineSampleRate);

struct CarNoiseSpec {
  std::string name;
  double cutoff_hz = 500.0;  // 8th-order Butterworth low-pass
  double drift_depth = 0.0;  // slow sinusoidal gain drift, 0 = stationary
  double drift_hz = 0.2;
};

// The two built-in noise types.
std::vector<CarNoiseSpec> default_noises();

// Filtered Gaussian noise with RMS 0.1.
audio::AudioSignal car_noise(const CarNoiseSpec& spec, double seconds, std::uint64_t seed,
                             int sample_rate = audio::kPipelineSampleRate);

// Fraction of a signal's energy below cutoff_hz, from its full-length DFT.
double energy_fraction_below(const audio::AudioSignal& signal, double cutoff_hz);

struct SynthCorpus {
  std::filesystem::path root;
  std::filesystem::path manifest;                // root/manifest.tsv
  std::vector<std::filesystem::path> noises;     // root/noise/<name>.wav
};

inline constexpr double kNoiseSeconds = 20.0;

// Writes root/speech/utt_NNNN.wav, root/noise/<name>.wav and a manifest with
// a seeded 50/25/25 split. Deterministic per seed.
SynthCorpus synth_corpus(const std::filesystem::path& root, std::size_t n_utts,
                         std::uint64_t seed,
                         const audio::SplitRatios& ratios = audio::SplitRatios{});

}  // namespace cise::synth

#endif  // CISE_SYNTH_H_
