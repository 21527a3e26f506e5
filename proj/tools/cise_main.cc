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

// Command-line front end: corpus synthesis, mixing, features, training,
// enhancement, electrodograms, scoring and full experiments.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cise/audio_io.h"
#include "cise/ci_features.h"
#include "cise/classic_se.h"
#include "cise/dsp.h"
#include "cise/experiment.h"
#include "cise/metrics.h"
#include "cise/se_models.h"
#include "cise/synth.h"

namespace fs = std::filesystem;
using namespace cise;

namespace {

// Every experiment config key, exposed as --<key-with-dashes>.
const std::vector<std::string> kConfigKeys = {
    "corpus",         "synth_utts",     "noises",       "snrs",          "systems",
    "epochs",         "batch_size",     "learning_rate", "crop_frames",  "dev_selection",
    "hidden_layers",  "hidden_channels", "kernel_width", "split",         "max_train_utts",
    "max_dev_utts",   "max_test_utts",  "out_dir",      "run_name",
};

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    for (const auto& key : kConfigKeys) {
      std::string flag = "--" + key;
      for (char& c : flag) {
        if (c == '_') c = '-';
      }
      app->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { values[key] = v; }, "config key " + key);
    }
  }

  experiment::ExperimentConfig resolve(std::optional<std::uint64_t> seed) const {
    experiment::ExperimentConfig cfg;
    if (!config_file.empty()) cfg = experiment::load_config(config_file);
    for (const auto& [k, v] : values) cfg.set(k, v);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

// Features from a WAV file or a T x 22 CSV written by `features`.
ci::CiFeatureSequence load_features(const fs::path& path) {
  if (path.extension() == ".wav") return ci::FeatureExtractor().features(audio::load_wav(path));
  ci::CiFeatureSequence f;
  f.features = read_matrix_csv(path);
  f.frame_rate = audio::kPipelineSampleRate / static_cast<double>(dsp::WindowConfig{}.hop);
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CI-feature speech enhancement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic speech + car-noise corpus");
  fs::path synth_out;
  std::size_t synth_utts = 400;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--utts", synth_utts, "number of utterances")->check(CLI::Range(10, 1000000));

  // mix
  auto* mix_cmd = app.add_subcommand("mix", "mix speech with noise at a target SNR");
  fs::path mix_speech, mix_noise, mix_out, mix_noise_out;
  double mix_snr = 0.0;
  mix_cmd->add_option("--speech", mix_speech)->required()->check(CLI::ExistingFile);
  mix_cmd->add_option("--noise", mix_noise)->required()->check(CLI::ExistingFile);
  mix_cmd->add_option("--snr", mix_snr, "target SNR in dB")->required();
  mix_cmd->add_option("--out", mix_out, "mixture WAV")->required();
  mix_cmd->add_option("--noise-out", mix_noise_out, "scaled noise WAV");

  // features
  auto* feat_cmd = app.add_subcommand("features", "CI features (T x 22 CSV) of a WAV file");
  fs::path feat_in, feat_out, feat_spec;
  feat_cmd->add_option("--in", feat_in)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--out", feat_out)->required();
  feat_cmd->add_option("--spectrogram", feat_spec, "also write the power spectrogram CSV");

  // train
  auto* train_cmd = app.add_subcommand("train", "train one CNN enhancer");
  std::string train_arch;
  fs::path train_out, train_history;
  ConfigFlags train_flags;
  train_cmd->add_option("--arch", train_arch, "vanilla, ss-cnn, wiener-cnn [+ -causal]")
      ->required();
  train_cmd->add_option("--out", train_out, "model file")->required();
  train_cmd->add_option("--history", train_history, "per-epoch MSE CSV");
  train_flags.attach(train_cmd);

  // enhance
  auto* enh_cmd = app.add_subcommand("enhance", "enhance the CI features of a noisy WAV");
  fs::path enh_in, enh_model, enh_out, enh_electro;
  std::string enh_system;
  bool enh_clamp = false;
  enh_cmd->add_option("--in", enh_in)->required()->check(CLI::ExistingFile);
  auto* model_opt = enh_cmd->add_option("--model", enh_model, "trained model file")
                        ->check(CLI::ExistingFile);
  enh_cmd->add_option("--system", enh_system, "wiener-as, logmmse, spectral-sub or noisy")
      ->excludes(model_opt);
  enh_cmd->add_option("--out", enh_out, "enhanced features CSV")->required();
  enh_cmd->add_option("--electrodogram", enh_electro, "also write <prefix>.csv/.png");
  enh_cmd->add_flag("--clamp-mask", enh_clamp, "clamp Wiener masks to [0, 2]");

  // electrodogram
  auto* el_cmd = app.add_subcommand("electrodogram", "n-of-m electrodogram CSV + PNG");
  fs::path el_in, el_out;
  std::size_t el_n = ci::kDefaultSelected;
  el_cmd->add_option("--in", el_in, "WAV or features CSV")->required()->check(CLI::ExistingFile);
  el_cmd->add_option("--out", el_out, "output prefix")->required();
  el_cmd->add_option("--n", el_n, "channels selected per frame")->check(CLI::Range(1, 22));

  // evaluate
  auto* ev_cmd = app.add_subcommand("evaluate", "ECM between clean and processed features");
  fs::path ev_clean, ev_proc;
  bool ev_per_channel = false;
  ev_cmd->add_option("--clean", ev_clean, "WAV or features CSV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--processed", ev_proc, "WAV or features CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_flag("--per-channel", ev_per_channel, "print per-channel correlations");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "full train / enhance / score run");
  ConfigFlags exp_flags;
  exp_flags.attach(exp_cmd);

  // report
  auto* rep_cmd = app.add_subcommand("report", "re-render plots from a report CSV");
  fs::path rep_in, rep_out;
  rep_cmd->add_option("--in", rep_in)->required()->check(CLI::ExistingFile);
  rep_cmd->add_option("--out", rep_out)->required();

  CLI11_PARSE(app, argc, argv);
  const std::uint64_t base_seed = seed.value_or(1);

  try {
    if (*synth_cmd) {
      const auto corpus = synth::synth_corpus(synth_out, synth_utts, base_seed);
      std::cout << corpus.manifest.string() << "\n";
    } else if (*mix_cmd) {
      const auto m = audio::mix_at_snr(audio::load_wav(mix_speech), audio::load_wav(mix_noise),
                                       mix_snr, base_seed);
      audio::store_wav(mix_out, m.mixture);
      if (!mix_noise_out.empty()) audio::store_wav(mix_noise_out, m.noise_scaled);
      std::cout << "offset " << m.noise_offset << " gain " << m.noise_gain << "\n";
    } else if (*feat_cmd) {
      const ci::FeatureExtractor fx;
      const auto spec = fx.spectrogram(audio::load_wav(feat_in));
      write_matrix_csv(feat_out, fx.features(spec).features);
      if (!feat_spec.empty()) dsp::write_spectrogram_csv(feat_spec, spec);
    } else if (*train_cmd) {
      auto cfg = train_flags.resolve(seed);
      const auto arch = se::SeArchitecture::Parse(train_arch);
      const auto corpus = experiment::prepare_corpus(cfg, cfg.out_dir / "corpus");
      auto result = experiment::train_system(arch, corpus, cfg, &std::cerr);
      if (!train_history.empty()) se::write_history_csv(train_history, result.history);
      se::save_model(train_out, {arch, std::move(result.stats), std::move(result.network)});
      std::cout << "best epoch " << result.best_epoch << "\n";
    } else if (*enh_cmd) {
      const ci::FeatureExtractor fx;
      const auto spec = fx.spectrogram(audio::load_wav(enh_in));
      const auto noisy = fx.features(spec);
      ci::CiFeatureSequence out = noisy;
      if (!enh_model.empty()) {
        const auto model = se::load_model(enh_model);
        out = se::enhance(noisy, model.network, model.arch, model.stats, {enh_clamp});
      } else if (enh_system.empty() || enh_system == "noisy") {
      } else {
        const auto noise = classic::estimate_noise(spec);
        if (enh_system == "wiener-as") {
          out = fx.features(classic::wiener_as(spec, noise));
        } else if (enh_system == "logmmse") {
          out = fx.features(classic::logmmse(spec, noise));
        } else if (enh_system == "spectral-sub") {
          out = fx.features(classic::spectral_subtract(spec, noise));
        } else {
          throw std::invalid_argument("unknown system " + enh_system);
        }
      }
      write_matrix_csv(enh_out, out.features);
      if (!enh_electro.empty()) ci::render_electrodogram(ci::select_n_of_m(out), enh_electro);
    } else if (*el_cmd) {
      ci::render_electrodogram(ci::select_n_of_m(load_features(el_in), el_n), el_out);
    } else if (*ev_cmd) {
      const auto clean = load_features(ev_clean);
      const auto proc = load_features(ev_proc);
      const auto score = metrics::ecm(clean, proc);
      std::cout << "ecm " << format_double(score.value) << "\n";
      std::cout << "feature_mse " << format_double(metrics::feature_mse(clean.features, proc.features))
                << "\n";
      if (ev_per_channel) {
        for (std::size_t c = 0; c < score.per_channel.size(); ++c) {
          std::cout << "channel " << (c + 1) << " " << format_double(score.per_channel[c]) << "\n";
        }
      }
    } else if (*exp_cmd) {
      const auto cfg = exp_flags.resolve(seed);
      const auto run = experiment::run_experiment(cfg, &std::cerr);
      experiment::render_report(run.report, run.run_dir);
      std::cout << (run.run_dir / "report.csv").string() << "\n";
    } else if (*rep_cmd) {
      experiment::render_report(experiment::read_report_csv(rep_in), rep_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
