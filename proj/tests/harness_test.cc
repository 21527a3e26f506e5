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

#include "cise/experiment.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cise/metrics.h"
#include "cise/synth.h"
#include "doctest.h"
#include "test_util.h"

namespace cise::experiment {
namespace {

using testing::TempDir;
using testing::slurp;

TEST_CASE("synthetic speech and noise") {
  const auto s = synth::speech_like(5);
  CHECK(s.duration_seconds() >= 1.0);
  CHECK(s.duration_seconds() <= 3.0);
  CHECK(std::sqrt(audio::mean_square(s.samples)) <= 0.0501);
  double peak = 0.0;
  for (double v : s.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 0.95);
  // Leading silence before the first voiced stretch.
  for (std::size_t i = 0; i < 2400; ++i) REQUIRE(s.samples[i] == 0.0);
  CHECK(synth::speech_like(5).samples == s.samples);
  CHECK(synth::speech_like(6).samples != s.samples);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CHECK(synth::energy_fraction_below(synth::speech_like(seed), 2000.0) > 0.6);
  }
  for (const auto& spec : synth::default_noises()) {
    const auto n = synth::car_noise(spec, 5.0, 3);
    CHECK(n.size() == 80000);
    CHECK(std::sqrt(audio::mean_square(n.samples)) == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(synth::energy_fraction_below(n, 500.0) > 0.9);
  }
}

TEST_CASE("energy fraction of pure tones") {
  audio::AudioSignal tone;
  tone.samples.resize(16000);
  for (std::size_t i = 0; i < tone.size(); ++i) tone.samples[i] = std::sin(2 * M_PI * 1000.0 * i / 16000.0);
  CHECK(synth::energy_fraction_below(tone, 900.0) < 1e-6);
  CHECK(synth::energy_fraction_below(tone, 1100.0) > 1.0 - 1e-6);
}

TEST_CASE("synth_corpus is deterministic") {
  TempDir a("synth"), b("synth");
  const auto ca = synth::synth_corpus(a.path(), 12, 9);
  const auto cb = synth::synth_corpus(b.path(), 12, 9);
  CHECK(slurp(ca.manifest) == slurp(cb.manifest));
  const auto m = audio::read_manifest(ca.manifest);
  REQUIRE(m.entries.size() == 12);
  CHECK(m.count(audio::Split::kDev) == 3);
  CHECK(m.count(audio::Split::kTest) == 3);
  for (const auto& e : m.entries) CHECK(slurp(a.path() / e.path) == slurp(b.path() / e.path));
  REQUIRE(ca.noises.size() == 2);
  CHECK(slurp(ca.noises[1]) == slurp(cb.noises[1]));
  CHECK_THROWS_AS(synth::synth_corpus(a.path(), 9, 1), std::invalid_argument);
}

TEST_CASE("config parsing") {
  TempDir dir("cfg");
  std::ofstream(dir / "c.txt") << "# desk run\nsnrs = -5, 0 ,5\nsystems=noisy,logmmse\n"
                                  "epochs = 3  # short\nsplit = 0.6,0.2,0.2\nseed=17\n";
  const auto cfg = load_config(dir / "c.txt");
  CHECK(cfg.snrs == std::vector<double>{-5.0, 0.0, 5.0});
  CHECK(cfg.systems == std::vector<std::string>{"noisy", "logmmse"});
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.seed == 17);
  CHECK(cfg.ratios.train == 0.6);

  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("colour", "blue"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("epochs", "many"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("seed", "-1"), std::invalid_argument);
  c.set("systems", "noisy,transformer");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExperimentConfig{};
  c.set("snrs", "");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  std::ofstream(dir / "bad.txt") << "snrs -5\n";
  CHECK_THROWS_AS(load_config(dir / "bad.txt"), FormatError);
}

TEST_CASE("config text and hash") {
  ExperimentConfig a, b;
  CHECK(a.to_text() == b.to_text());
  CHECK(a.hash() == b.hash());
  b.out_dir = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.set("learning_rate", "0.002");
  CHECK(a.hash() != b.hash());
  // Every key written by to_text can be read back.
  ExperimentConfig c;
  for (const auto& line : split(b.to_text(), '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  CHECK(c.to_text() == b.to_text());
}

TEST_CASE("report CSV and plots") {
  TempDir dir("report");
  ExperimentReport one;
  one.records.push_back({"noisy", "car1", -5.0, 0.8125, 100});
  render_report(one, dir.path());
  CHECK(slurp(dir / "report.csv") == "system,noise,snr_db,mean_ecm,n\nnoisy,car1,-5,0.8125,100\n");
  CHECK(std::filesystem::exists(dir / "ecm_car1.png"));

  TempDir two("report");
  ExperimentReport r;
  for (const char* noise : {"car1", "car2"}) {
    for (const char* sys : {"noisy", "wiener-cnn"}) {
      for (double snr : {-10.0, 0.0}) r.records.push_back({sys, noise, snr, 0.1 + 0.7 * std::abs(snr) / 10.0 + 1e-17, 7});
    }
  }
  r.records[3].mean_ecm = 0.123456789012345678;
  render_report(r, two.path());
  CHECK(std::filesystem::exists(two / "ecm_car1.png"));
  CHECK(std::filesystem::exists(two / "ecm_car2.png"));
  const auto back = read_report_csv(two / "report.csv");
  CHECK(back.records == r.records);
  CHECK(back.at("wiener-cnn", "car2", 0.0).n == 7);
  CHECK_THROWS_AS(back.at("wiener-cnn", "car3", 0.0), std::out_of_range);
  CHECK_THROWS_AS(render_report(ExperimentReport{}, two.path()), std::invalid_argument);
}

ExperimentConfig small_config(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.synth_utts = 20;
  cfg.systems = {"noisy"};
  cfg.out_dir = out;
  cfg.run_name = "run";
  return cfg;
}

TEST_CASE("passthrough report equals the mean ECM of unprocessed pairs") {
  TempDir dir("exp");
  ExperimentConfig cfg = small_config(dir.path());
  cfg.snrs = {0.0, 60.0};
  const RunOutput run = run_experiment(cfg);
  CHECK(std::filesystem::exists(run.run_dir / "run_info.txt"));
  REQUIRE(run.report.records.size() == 4);

  const Corpus corpus = prepare_corpus(cfg, run.run_dir / "corpus");
  REQUIRE(corpus.test.size() == 5);
  const ci::FeatureExtractor fx;
  for (std::size_t k = 0; k < 2; ++k) {
    for (double snr : cfg.snrs) {
      std::vector<std::pair<ci::CiFeatureSequence, ci::CiFeatureSequence>> pairs;
      for (std::size_t u = 0; u < corpus.test.size(); ++u) {
        const auto m = test_mixture(corpus, cfg, k, u, snr);
        const auto clean = fx.features(m.clean);
        const auto noisy = fx.features(m.mixture);
        REQUIRE(clean.num_frames() == noisy.num_frames());
        pairs.emplace_back(clean, noisy);
      }
      const auto& rec = run.report.at("noisy", corpus.noise_names[k], snr);
      CHECK(rec.n == 5);
      CHECK(std::abs(rec.mean_ecm - metrics::mean_ecm(pairs)) < 1e-12);
      if (snr == 60.0) CHECK(rec.mean_ecm > 0.99);
    }
  }
}

TEST_CASE("every system appears in every cell") {
  TempDir dir("exp");
  ExperimentConfig cfg = small_config(dir.path());
  cfg.systems = {"noisy", "ss-cnn-causal", "wiener-as", "logmmse", "spectral-sub"};
  cfg.snrs = {-5.0, 5.0};
  cfg.train.epochs = 2;
  cfg.max_train_utts = 4;
  cfg.max_dev_utts = 2;
  cfg.max_test_utts = 2;
  const RunOutput run = run_experiment(cfg);
  CHECK(run.report.records.size() == 5 * 2 * 2);
  for (const auto& sys : cfg.systems) {
    for (const char* noise : {"car1", "car2"}) {
      for (double snr : cfg.snrs) {
        const auto& r = run.report.at(sys, noise, snr);
        CHECK(r.n == 2);
        CHECK((r.mean_ecm >= 0.0 && r.mean_ecm <= 1.0));
      }
    }
  }
  CHECK(std::filesystem::exists(run.run_dir / "history_ss-cnn-causal.csv"));
  CHECK(std::filesystem::exists(run.run_dir / "model_ss-cnn-causal.cise"));
}

TEST_CASE("corpus from a WAV directory") {
  TempDir dir("corpus");
  synth::synth_corpus(dir / "wavs", 12, 4);
  ExperimentConfig cfg;
  cfg.corpus = (dir / "wavs").string();
  cfg.noises = {"car2", (dir / "wavs" / "noise" / "car1.wav").string()};
  const Corpus c = prepare_corpus(cfg, dir / "unused");
  CHECK(c.train.size() == 6);
  CHECK(c.test_ids.size() == 3);
  CHECK(c.noise_names == std::vector<std::string>{"car2", "car1"});
  CHECK(c.train_noise[0].size() + c.test_noise[0].size() ==
        static_cast<std::size_t>(synth::kNoiseSeconds * 16000));
  CHECK(!std::filesystem::exists(dir / "unused"));
  cfg.noises = {"truck"};
  CHECK_THROWS(prepare_corpus(cfg, dir / "unused"));
}

TEST_CASE("training mixtures vary per epoch and crops match full features") {
  TempDir dir("mix");
  synth::synth_corpus(dir.path(), 12, 2);
  ExperimentConfig cfg;
  cfg.corpus = dir.path().string();
  const Corpus c = prepare_corpus(cfg, dir.path());
  const MixtureExamples full(c.train, c.train_noise, cfg.snrs, 5, true);
  const MixtureExamples cropped(c.train, c.train_noise, cfg.snrs, 5, true, 100);
  std::set<double> firsts;
  for (int epoch = 0; epoch < 6; ++epoch) {
    const auto a = full.get(0, epoch);
    const auto b = cropped.get(0, epoch);
    REQUIRE(b.noisy.rows() == 100);
    // Locate the crop by its clean features, then compare the noisy ones.
    std::size_t offset = a.clean.rows();
    for (std::size_t o = 0; o + 100 <= a.clean.rows(); ++o) {
      if (a.clean.slice_rows(o, 100) == b.clean) {
        offset = o;
        break;
      }
    }
    REQUIRE(offset < a.clean.rows());
    const Matrix expect = a.noisy.slice_rows(offset, 100);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(b.noisy.values()[i] == doctest::Approx(expect.values()[i]).epsilon(1e-12));
    }
    firsts.insert(a.noisy(a.noisy.rows() / 2, 0));
  }
  CHECK(firsts.size() > 1);
  CHECK(full.get(3, 2).noisy == full.get(3, 2).noisy);
}

int run_cli(const std::string& args) {
  return std::system((std::string(CISE_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
}

TEST_CASE("command-line subcommands") {
  TempDir dir("cli");
  const std::string d = dir.path().string();
  REQUIRE(run_cli("synth --out " + d + "/c --utts 10 --seed 3") == 0);
  const std::string speech = d + "/c/speech/utt_0000.wav";
  const std::string noise = d + "/c/noise/car1.wav";
  REQUIRE(run_cli("mix --speech " + speech + " --noise " + noise + " --snr 0 --out " + d +
                  "/m.wav --noise-out " + d + "/n.wav") == 0);
  const auto clean = audio::load_wav(speech);
  const auto mixed = audio::load_wav(d + "/m.wav");
  CHECK(mixed.size() == clean.size());

  REQUIRE(run_cli("features --in " + d + "/m.wav --out " + d + "/f.csv --spectrogram " + d +
                  "/s.csv") == 0);
  const Matrix f = read_matrix_csv(d + "/f.csv");
  CHECK(f.cols() == 22);
  CHECK(read_matrix_csv(d + "/s.csv").cols() == 129);

  REQUIRE(run_cli("electrodogram --in " + d + "/f.csv --out " + d + "/e") == 0);
  CHECK(std::filesystem::exists(d + "/e.csv"));
  CHECK(std::filesystem::exists(d + "/e.png"));

  for (const char* sys : {"wiener-as", "logmmse", "spectral-sub", "noisy"}) {
    CHECK(run_cli("enhance --in " + d + "/m.wav --system " + sys + " --out " + d + "/x.csv") == 0);
  }
  const std::string eval = d + "/eval.txt";
  REQUIRE(std::system((std::string(CISE_CLI_PATH) + " evaluate --clean " + speech +
                       " --processed " + d + "/m.wav > " + eval).c_str()) == 0);
  CHECK(slurp(eval).rfind("ecm ", 0) == 0);

  CHECK(run_cli("enhance --in " + d + "/m.wav --system bogus --out " + d + "/x.csv") != 0);
  CHECK(run_cli("experiment --bogus-flag 3") != 0);
  CHECK(run_cli("mix --speech " + d + "/missing.wav --noise " + noise + " --snr 0 --out " + d + "/q.wav") != 0);

  REQUIRE(run_cli("--seed 5 train --arch vanilla-causal --corpus " + d + "/c --epochs 1 --out " +
                  d + "/v.cise --history " + d + "/h.csv") == 0);
  CHECK(slurp(d + "/h.csv").rfind("epoch,train_mse,dev_mse\n1,", 0) == 0);
  REQUIRE(run_cli("enhance --in " + d + "/m.wav --model " + d + "/v.cise --out " + d +
                  "/y.csv --electrodogram " + d + "/ye") == 0);
  CHECK(read_matrix_csv(d + "/y.csv").rows() == f.rows());

  REQUIRE(run_cli("experiment --synth-utts 12 --systems noisy,wiener-as --snrs -5,5 "
                  "--out-dir " + d + "/runs --run-name r") == 0);
  CHECK(std::filesystem::exists(d + "/runs/r/report.csv"));
  CHECK(std::filesystem::exists(d + "/runs/r/ecm_car2.png"));
  REQUIRE(run_cli("report --in " + d + "/runs/r/report.csv --out " + d + "/again") == 0);
  CHECK(slurp(d + "/again/report.csv") == slurp(d + "/runs/r/report.csv"));
}

}  // namespace
}  // namespace cise::experiment
