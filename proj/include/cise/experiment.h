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

// End-to-end experiment: corpus, multi-condition training of the CNN
// enhancers, SNR sweep over the test split, mean ECM report and plots.

#ifndef CISE_EXPERIMENT_H_
#define CISE_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cise/audio_io.h"
#include "cise/ci_features.h"
#include "cise/se_models.h"

namespace cise::experiment {

// System names accepted in a configuration: "noisy", the six CNN
// architecture names, "wiener-as", "logmmse" and "spectral-sub".
std::vector<std::string> default_systems();
bool is_known_system(const std::string& name);

struct ExperimentConfig {
  // "synthetic" or a directory holding manifest.tsv; paths in the manifest
  // are relative to it.
  std::string corpus = "synthetic";
  std::size_t synth_utts = 400;
  // Names resolve to <corpus>/noise/<name>.wav; anything ending in .wav is
  // taken as a path.
  std::vector<std::string> noises = {"car1", "car2"};
  std::vector<double> snrs = {-10.0, -5.0, 0.0, 5.0};
  std::vector<std::string> systems = default_systems();
  std::uint64_t seed = 1;
  se::TrainConfig train{50, 8, 1e-3, 1, true, 400};
  se::ModelShape shape;
  audio::SplitRatios ratios;
  // 0 keeps the whole split.
  std::size_t max_train_utts = 0;
  std::size_t max_dev_utts = 0;
  std::size_t max_test_utts = 0;
  std::filesystem::path out_dir = "runs";
  std::string run_name;  // empty: timestamp

  void validate() const;
  // Sets one key; throws std::invalid_argument for unknown keys or values.
  void set(const std::string& key, const std::string& value);
  // Canonical "key=value" lines, sorted by key.
  std::string to_text() const;
  std::uint64_t hash() const;
};

// Plain-text file, one "key = value" per line, '#' comments. Lists are
// comma-separated.
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = ExperimentConfig{});

struct ReportRecord {
  std::string system;
  std::string noise;
  double snr_db = 0.0;
  double mean_ecm = 0.0;
  std::size_t n = 0;

  friend bool operator==(const ReportRecord&, const ReportRecord&) = default;
};

struct ExperimentReport {
  std::vector<ReportRecord> records;
  std::uint64_t config_hash = 0;
  std::string started;
  std::string finished;

  // Throws std::out_of_range when the cell is missing.
  const ReportRecord& at(const std::string& system, const std::string& noise, double snr) const;
};

// Speech and noise resolved from a configuration, split by the manifest.
struct Corpus {
  std::filesystem::path root;
  audio::DatasetManifest manifest;
  std::vector<audio::AudioSignal> train, dev, test;
  std::vector<std::string> test_ids;
  std::vector<std::string> noise_names;
  // Each noise recording is cut in two: the first 60% feeds training and
  // dev mixtures, the rest test mixtures.
  std::vector<audio::AudioSignal> train_noise, test_noise;
};

// Synthesises the corpus under synth_dir when cfg.corpus is "synthetic".
Corpus prepare_corpus(const ExperimentConfig& cfg, const std::filesystem::path& synth_dir);

// Multi-condition training data: each pass draws a fresh (noise, SNR, offset)
// per utterance. With crop_frames > 0 every example is a random window of
// that many frames, computed from the matching stretch of the pre-emphasised
// mixture (identical to cropping whole-utterance features).
class MixtureExamples : public se::ExampleSource {
 public:
  MixtureExamples(const std::vector<audio::AudioSignal>& speech,
                  const std::vector<audio::AudioSignal>& noises, std::vector<double> snrs,
                  std::uint64_t seed, bool vary_per_epoch, std::size_t crop_frames = 0);
  std::size_t size() const override { return speech_.size(); }
  se::TrainingExample get(std::size_t index, int epoch) const override;

 private:
  const std::vector<audio::AudioSignal>& speech_;
  const std::vector<audio::AudioSignal>& noises_;
  std::vector<double> snrs_;
  std::uint64_t seed_;
  bool vary_per_epoch_;
  std::size_t crop_frames_;
  ci::FeatureExtractor extractor_;
  std::vector<Matrix> clean_;  // cached clean features
};

// The mixture scored for test utterance u under noise k at the given SNR. The
// noise offset depends only on (k, u).
audio::NoisyMixture test_mixture(const Corpus& corpus, const ExperimentConfig& cfg,
                                 std::size_t k, std::size_t u, double snr_db);

se::TrainResult train_system(const se::SeArchitecture& arch, const Corpus& corpus,
                             const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct RunOutput {
  ExperimentReport report;
  std::filesystem::path run_dir;
};

// Trains every configured CNN, scores every system on every (noise, SNR)
// cell of the test split and writes models, histories and run_info.txt into
// the run directory. The report files are written by render_report.
RunOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// report.csv ("system,noise,snr_db,mean_ecm,n") and ecm_<noise>.png.
void render_report(const ExperimentReport& report, const std::filesystem::path& out_dir);
ExperimentReport read_report_csv(const std::filesystem::path& path);

}  // namespace cise::experiment

#endif  // CISE_EXPERIMENT_H_
