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

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace cise::dsp {
namespace {

// FFTW planning is not thread-safe, executing a finished plan on new arrays
// is. Plans are created once per size and kept for the process lifetime.
class RealFftPlans {
 public:
  static RealFftPlans& instance() {
    static RealFftPlans plans;
    return plans;
  }

  fftw_plan get(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (p == nullptr) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<double> hamming(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  return w;
}

WindowConfig WindowConfig::Make(std::size_t window_len, std::size_t hop,
                                std::size_t fft_size) {
  WindowConfig cfg;
  cfg.window_len = window_len;
  cfg.hop = hop;
  cfg.fft_size = fft_size;
  cfg.window = hamming(window_len);
  cfg.validate();
  return cfg;
}

void WindowConfig::validate() const {
  if (hop == 0 || hop > window_len || window_len > fft_size) {
    throw std::invalid_argument("WindowConfig: need 0 < hop <= window_len <= fft_size");
  }
  if (window.size() != window_len) {
    throw std::invalid_argument("WindowConfig: window length mismatch");
  }
}

audio::AudioSignal pre_emphasize(const audio::AudioSignal& signal, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("pre_emphasize: alpha must be in [0, 1)");
  }
  audio::AudioSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples.resize(signal.size());
  if (signal.samples.empty()) return out;
  out.samples[0] = signal.samples[0];
  for (std::size_t n = 1; n < signal.size(); ++n) {
    out.samples[n] = signal.samples[n] - alpha * signal.samples[n - 1];
  }
  return out;
}

std::size_t frame_count(std::size_t length, std::size_t window_len, std::size_t hop) {
  if (length < window_len || hop == 0) return 0;
  return (length - window_len) / hop + 1;
}

Matrix frame_and_window(const audio::AudioSignal& signal, const WindowConfig& cfg) {
  cfg.validate();
  if (signal.size() < cfg.window_len) {
    throw std::invalid_argument("frame_and_window: signal shorter than one window");
  }
  const std::size_t frames = frame_count(signal.size(), cfg.window_len, cfg.hop);
  Matrix out(frames, cfg.window_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = signal.samples.data() + t * cfg.hop;
    auto row = out.row(t);
    for (std::size_t n = 0; n < cfg.window_len; ++n) row[n] = src[n] * cfg.window[n];
  }
  return out;
}

PowerSpectrogram power_spectrum(const Matrix& frames, const WindowConfig& cfg,
                                double sample_rate) {
  cfg.validate();
  if (frames.cols() > cfg.fft_size) {
    throw std::invalid_argument("power_spectrum: frame longer than fft_size");
  }
  const int n = static_cast<int>(cfg.fft_size);
  const std::size_t bins = cfg.num_bins();
  fftw_plan plan = RealFftPlans::instance().get(n);

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));

  PowerSpectrogram spec;
  spec.frame_rate = sample_rate / static_cast<double>(cfg.hop);
  spec.frames = Matrix(frames.rows(), bins);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    auto src = frames.row(t);
    std::fill(in.get(), in.get() + n, 0.0);
    std::copy(src.begin(), src.end(), in.get());
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    auto dst = spec.frames.row(t);
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      dst[k] = re * re + im * im;
    }
  }
  return spec;
}

PowerSpectrogram analyze(const audio::AudioSignal& signal, const WindowConfig& cfg,
                         double pre_emphasis) {
  return power_spectrum(frame_and_window(pre_emphasize(signal, pre_emphasis), cfg), cfg,
                        signal.sample_rate);
}

void write_spectrogram_csv(const std::filesystem::path& path, const PowerSpectrogram& s) {
  write_matrix_csv(path, s.frames);
}

}  // namespace cise::dsp
