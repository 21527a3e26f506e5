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

#include "cise/audio_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cise::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

AudioSignal load_wav(const std::filesystem::path& path, int expected_rate) {
  const std::vector<unsigned char> bytes = slurp(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw FormatError(name + ": bad fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(name + ": bad extensible fmt chunk");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Tolerate writers that leave a bogus size on the final chunk.
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (data == nullptr) throw FormatError(name + ": missing data chunk");
  if (channels != 1) {
    throw UnsupportedFormatError(name + ": expected mono, got " +
                                 std::to_string(channels) + " channels");
  }

  AudioSignal out;
  out.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    std::size_t n = data_size / 2;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
      out.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    std::size_t n = data_size / 4;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t raw = read_u32(data + 4 * i);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      if (!std::isfinite(f)) throw FormatError(name + ": non-finite sample");
      out.samples[i] = f;
    }
  } else {
    throw UnsupportedFormatError(name + ": unsupported codec (format " +
                                 std::to_string(format) + ", " +
                                 std::to_string(bits) + " bits)");
  }

  if (expected_rate != 0 && out.sample_rate != expected_rate) {
    throw SampleRateError(name + ": sample rate " + std::to_string(out.sample_rate) +
                              " Hz, expected " + std::to_string(expected_rate) +
                              " Hz (resample externally)",
                          out.sample_rate);
  }
  return out;
}

void store_wav(const std::filesystem::path& path, const AudioSignal& signal) {
  if (signal.sample_rate <= 0) throw std::invalid_argument("store_wav: bad sample rate");
  std::vector<std::int16_t> pcm(signal.samples.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) {
    double x = signal.samples[i];
    if (!std::isfinite(x) || x > 1.0 || x < -1.0) {
      std::ostringstream msg;
      msg << "store_wav: sample " << i << " = " << x << " outside [-1, 1]";
      throw std::domain_error(msg.str());
    }
    double q = std::round(x * 32768.0);
    pcm[i] = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (std::int16_t v : pcm) put_u16(out, static_cast<std::uint16_t>(v));
  if (!out) throw IoError("write failed: " + path.string());
}

double mean_square(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

NoisyMixture mix_at_snr(const AudioSignal& speech, const AudioSignal& noise,
                        double snr_db, std::uint64_t seed) {
  if (speech.sample_rate != noise.sample_rate) {
    throw std::invalid_argument("mix_at_snr: sample rates differ");
  }
  if (speech.samples.empty() || noise.samples.empty()) {
    throw std::invalid_argument("mix_at_snr: empty speech or noise");
  }
  if (!std::isfinite(snr_db)) throw std::invalid_argument("mix_at_snr: snr not finite");

  const std::size_t n = speech.size();
  const std::size_t period = noise.size();
  std::mt19937_64 rng(seed);
  const std::size_t offset = static_cast<std::size_t>(rng() % period);

  std::vector<double> tiled(n);
  for (std::size_t i = 0; i < n; ++i) tiled[i] = noise.samples[(offset + i) % period];

  const double p_speech = mean_square(speech.samples);
  const double p_noise = mean_square(tiled);
  if (p_speech <= 0.0) throw std::invalid_argument("mix_at_snr: zero-power speech");
  if (p_noise <= 0.0) throw std::invalid_argument("mix_at_snr: zero-power noise");

  NoisyMixture m;
  m.target_snr_db = snr_db;
  m.noise_offset = offset;
  m.noise_gain = std::sqrt(p_speech / (p_noise * std::pow(10.0, snr_db / 10.0)));
  m.clean = speech;
  m.noise_scaled.sample_rate = speech.sample_rate;
  m.noise_scaled.samples.resize(n);
  m.mixture.sample_rate = speech.sample_rate;
  m.mixture.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.noise_scaled.samples[i] = m.noise_gain * tiled[i];
    m.mixture.samples[i] = speech.samples[i] + m.noise_scaled.samples[i];
  }
  return m;
}

double realized_snr_db(const NoisyMixture& m) {
  return 10.0 * std::log10(mean_square(m.clean.samples) /
                           mean_square(m.noise_scaled.samples));
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split '" + s + "'");
}

std::vector<ManifestEntry> DatasetManifest::subset(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.split == s; }));
}

DatasetManifest split_manifest(std::vector<ManifestEntry> entries,
                               const SplitRatios& ratios, std::uint64_t seed) {
  if (entries.size() < 3) throw std::invalid_argument("split_manifest: fewer than 3 entries");
  if (!(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0)) {
    throw std::invalid_argument("split_manifest: ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split_manifest: ratios must sum to 1");
  }

  // Fisher-Yates with raw engine output so the order does not depend on the
  // standard library's distribution implementations.
  std::mt19937_64 rng(seed);
  for (std::size_t i = entries.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(entries[i], entries[j]);
  }

  const std::size_t n = entries.size();
  const auto n_dev = static_cast<std::size_t>(std::floor(n * ratios.dev + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
  const std::size_t n_train = n - n_dev - n_test;
  for (std::size_t i = 0; i < n; ++i) {
    entries[i].split = i < n_train ? Split::kTrain
                       : i < n_train + n_dev ? Split::kDev
                                             : Split::kTest;
  }
  return DatasetManifest{std::move(entries), seed};
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : m.entries) {
    out << e.id << '\t' << e.path << '\t' << to_string(e.split) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected id<TAB>path<TAB>split");
    }
    m.entries.push_back({fields[0], fields[1], parse_split(fields[2])});
  }
  return m;
}

}  // namespace cise::audio
