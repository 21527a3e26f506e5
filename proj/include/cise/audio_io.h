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

// WAV input/output, corpus manifests and SNR-controlled mixing.

#ifndef CISE_AUDIO_IO_H_
#define CISE_AUDIO_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cise/common.h"

namespace cise::audio {

inline constexpr int kPipelineSampleRate = 16000;

struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = kPipelineSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Codec or channel layout the reader does not handle.
class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

// File decoded fine but its rate differs from the one the caller asked for.
class SampleRateError : public FormatError {
 public:
  SampleRateError(const std::string& what, int rate)
      : FormatError(what), rate_(rate) {}
  int rate() const { return rate_; }

 private:
  int rate_;
};

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float.
// PCM values are divided by 32768. Pass expected_rate = 0 to accept any rate.
AudioSignal load_wav(const std::filesystem::path& path,
                     int expected_rate = kPipelineSampleRate);

// Writes 16-bit PCM. Samples outside [-1, 1] or non-finite samples are an
// error; +1.0 is stored as 32767.
void store_wav(const std::filesystem::path& path, const AudioSignal& signal);

double mean_square(const std::vector<double>& x);

struct NoisyMixture {
  AudioSignal clean;
  AudioSignal noise_scaled;
  AudioSignal mixture;
  double target_snr_db = 0.0;
  std::size_t noise_offset = 0;
  double noise_gain = 1.0;
};

// Tiles the noise cyclically from a seed-derived offset, scales it so the
// full-utterance power ratio matches snr_db and adds it to the speech.
NoisyMixture mix_at_snr(const AudioSignal& speech, const AudioSignal& noise,
                        double snr_db, std::uint64_t seed);

// 10*log10(P_clean / P_noise) recomputed from a mixture's stored parts.
double realized_snr_db(const NoisyMixture& m);

enum class Split { kTrain, kDev, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::string path;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;

  std::vector<ManifestEntry> subset(Split s) const;
  std::size_t count(Split s) const;
};

struct SplitRatios {
  double train = 0.5;
  double dev = 0.25;
  double test = 0.25;
};

// Seeded shuffle followed by a contiguous partition. Dev and test sizes are
// floor(n * ratio); the remainder goes to train.
DatasetManifest split_manifest(std::vector<ManifestEntry> entries,
                               const SplitRatios& ratios, std::uint64_t seed);

// Tab-separated "id<TAB>path<TAB>split", one entry per line.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace cise::audio

#endif  // CISE_AUDIO_IO_H_
