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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cise/classic_se.h"
#include "cise/dsp.h"
#include "cise/metrics.h"
#include "cise/raster.h"
#include "cise/synth.h"

namespace cise::experiment {
namespace {

constexpr double kTrainNoiseFraction = 0.6;
constexpr const char* kReportHeader = "system,noise,snr_db,mean_ecm,n";

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : split(value, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument(key + ": not a number: " + v);
  return d;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t u = 0;
  try {
    u = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') {
    throw std::invalid_argument(key + ": not a nonnegative integer: " + v);
  }
  return u;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(key + ": not a boolean: " + v);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string utc_timestamp(const char* fmt) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

bool is_cnn(const std::string& system) {
  for (const auto& a : se::all_architectures()) {
    if (a.name() == system) return true;
  }
  return false;
}

std::vector<audio::AudioSignal> load_split(const Corpus& c, audio::Split s, std::size_t cap,
                                           std::vector<std::string>* ids) {
  std::vector<audio::AudioSignal> out;
  for (const auto& e : c.manifest.entries) {
    if (e.split != s) continue;
    if (cap != 0 && out.size() >= cap) break;
    const std::filesystem::path p = e.path;
    out.push_back(audio::load_wav(p.is_absolute() ? p : c.root / p));
    if (ids) ids->push_back(e.id);
  }
  return out;
}

audio::AudioSignal segment(const audio::AudioSignal& s, std::size_t begin, std::size_t end) {
  audio::AudioSignal out;
  out.sample_rate = s.sample_rate;
  out.samples.assign(s.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     s.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Matrix classic_features(const std::string& system, const dsp::PowerSpectrogram& noisy,
                        const ci::FeatureExtractor& fx) {
  const classic::NoiseEstimate noise = classic::estimate_noise(noisy);
  if (system == "wiener-as") return fx.features(classic::wiener_as(noisy, noise)).features;
  if (system == "logmmse") return fx.features(classic::logmmse(noisy, noise)).features;
  return fx.features(classic::spectral_subtract(noisy, noise)).features;
}

}  // namespace

std::vector<std::string> default_systems() {
  std::vector<std::string> out = {"noisy"};
  for (const auto& a : se::all_architectures()) out.push_back(a.name());
  out.push_back("wiener-as");
  out.push_back("logmmse");
  return out;
}

bool is_known_system(const std::string& name) {
  return name == "noisy" || name == "wiener-as" || name == "logmmse" ||
         name == "spectral-sub" || is_cnn(name);
}

void ExperimentConfig::validate() const {
  if (snrs.empty()) throw std::invalid_argument("config: snr list is empty");
  if (systems.empty()) throw std::invalid_argument("config: no systems");
  if (noises.empty()) throw std::invalid_argument("config: no noises");
  for (const auto& s : systems) {
    if (!is_known_system(s)) throw std::invalid_argument("config: unknown system " + s);
  }
  for (double s : snrs) {
    if (!std::isfinite(s)) throw std::invalid_argument("config: non-finite snr");
  }
  if (corpus == "synthetic" && synth_utts < 10) {
    throw std::invalid_argument("config: synth_utts must be at least 10");
  }
  if (train.epochs < 1 || train.batch_size < 1 || !(train.learning_rate > 0.0)) {
    throw std::invalid_argument("config: invalid training settings");
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "corpus") {
    corpus = v;
  } else if (key == "synth_utts") {
    synth_utts = parse_uint(key, v);
  } else if (key == "noises") {
    noises = split_list(v);
  } else if (key == "snrs") {
    snrs.clear();
    for (const auto& s : split_list(v)) snrs.push_back(parse_double(key, s));
  } else if (key == "systems") {
    systems = split_list(v);
  } else if (key == "seed") {
    seed = parse_uint(key, v);
  } else if (key == "epochs") {
    train.epochs = static_cast<int>(parse_uint(key, v));
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(parse_uint(key, v));
  } else if (key == "learning_rate") {
    train.learning_rate = parse_double(key, v);
  } else if (key == "crop_frames") {
    train.crop_frames = parse_uint(key, v);
  } else if (key == "dev_selection") {
    train.dev_selection = parse_bool(key, v);
  } else if (key == "hidden_layers") {
    shape.hidden_layers = static_cast<int>(parse_uint(key, v));
  } else if (key == "hidden_channels") {
    shape.hidden_channels = static_cast<int>(parse_uint(key, v));
  } else if (key == "kernel_width") {
    shape.kernel_width = static_cast<int>(parse_uint(key, v));
  } else if (key == "split") {
    const auto parts = split_list(v);
    if (parts.size() != 3) throw std::invalid_argument("split: expected train,dev,test");
    ratios = {parse_double(key, parts[0]), parse_double(key, parts[1]),
              parse_double(key, parts[2])};
  } else if (key == "max_train_utts") {
    max_train_utts = parse_uint(key, v);
  } else if (key == "max_dev_utts") {
    max_dev_utts = parse_uint(key, v);
  } else if (key == "max_test_utts") {
    max_test_utts = parse_uint(key, v);
  } else if (key == "out_dir") {
    out_dir = v;
  } else if (key == "run_name") {
    run_name = v;
  } else {
    throw std::invalid_argument("config: unknown key " + key);
  }
}

std::string ExperimentConfig::to_text() const {
  std::vector<std::string> snr_text;
  for (double s : snrs) snr_text.push_back(format_double(s));
  const std::map<std::string, std::string> kv = {
      {"corpus", corpus},
      {"synth_utts", std::to_string(synth_utts)},
      {"noises", join(noises)},
      {"snrs", join(snr_text)},
      {"systems", join(systems)},
      {"seed", std::to_string(seed)},
      {"epochs", std::to_string(train.epochs)},
      {"batch_size", std::to_string(train.batch_size)},
      {"learning_rate", format_double(train.learning_rate)},
      {"crop_frames", std::to_string(train.crop_frames)},
      {"dev_selection", train.dev_selection ? "true" : "false"},
      {"hidden_layers", std::to_string(shape.hidden_layers)},
      {"hidden_channels", std::to_string(shape.hidden_channels)},
      {"kernel_width", std::to_string(shape.kernel_width)},
      {"split", format_double(ratios.train) + "," + format_double(ratios.dev) + "," +
                    format_double(ratios.test)},
      {"max_train_utts", std::to_string(max_train_utts)},
      {"max_dev_utts", std::to_string(max_dev_utts)},
      {"max_test_utts", std::to_string(max_test_utts)},
      {"out_dir", out_dir.string()},
      {"run_name", run_name},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical text, output location excluded.
  std::string text;
  for (const auto& line : split(to_text(), '\n')) {
    if (line.rfind("out_dir=", 0) == 0 || line.rfind("run_name=", 0) == 0) continue;
    text += line + "\n";
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    base.set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return base;
}

const ReportRecord& ExperimentReport::at(const std::string& system, const std::string& noise,
                                         double snr) const {
  for (const auto& r : records) {
    if (r.system == system && r.noise == noise && r.snr_db == snr) return r;
  }
  throw std::out_of_range("no report cell for " + system + "/" + noise + "/" + format_double(snr));
}

Corpus prepare_corpus(const ExperimentConfig& cfg, const std::filesystem::path& synth_dir) {
  Corpus c;
  if (cfg.corpus == "synthetic") {
    synth::synth_corpus(synth_dir, cfg.synth_utts, cfg.seed, cfg.ratios);
    c.root = synth_dir;
  } else {
    c.root = cfg.corpus;
  }
  c.manifest = audio::read_manifest(c.root / "manifest.tsv");
  c.train = load_split(c, audio::Split::kTrain, cfg.max_train_utts, nullptr);
  c.dev = load_split(c, audio::Split::kDev, cfg.max_dev_utts, nullptr);
  c.test = load_split(c, audio::Split::kTest, cfg.max_test_utts, &c.test_ids);
  if (c.train.empty() || c.dev.empty() || c.test.empty()) {
    throw Error("corpus " + c.root.string() + " has an empty split");
  }
  for (const auto& n : cfg.noises) {
    std::filesystem::path p = n;
    std::string name = n;
    if (p.extension() == ".wav") {
      name = p.stem().string();
    } else {
      p = c.root / "noise" / (n + ".wav");
    }
    const audio::AudioSignal full = audio::load_wav(p);
    const auto cut = static_cast<std::size_t>(kTrainNoiseFraction * static_cast<double>(full.size()));
    if (cut == 0 || cut == full.size()) throw Error("noise " + p.string() + " is too short");
    c.noise_names.push_back(name);
    c.train_noise.push_back(segment(full, 0, cut));
    c.test_noise.push_back(segment(full, cut, full.size()));
  }
  return c;
}

MixtureExamples::MixtureExamples(const std::vector<audio::AudioSignal>& speech,
                                 const std::vector<audio::AudioSignal>& noises,
                                 std::vector<double> snrs, std::uint64_t seed,
                                 bool vary_per_epoch, std::size_t crop_frames)
    : speech_(speech),
      noises_(noises),
      snrs_(std::move(snrs)),
      seed_(seed),
      vary_per_epoch_(vary_per_epoch),
      crop_frames_(crop_frames) {
  if (noises_.empty() || snrs_.empty()) throw std::invalid_argument("MixtureExamples: no conditions");
  clean_.reserve(speech_.size());
  for (const auto& s : speech_) clean_.push_back(extractor_.features(s).features);
}

se::TrainingExample MixtureExamples::get(std::size_t index, int epoch) const {
  const std::uint64_t pass = vary_per_epoch_ ? static_cast<std::uint64_t>(epoch) : 0;
  const std::uint64_t draw = derive_seed(seed_, {pass, index});
  const std::size_t conditions = noises_.size() * snrs_.size();
  const std::size_t cond = static_cast<std::size_t>(draw % conditions);
  const auto& noise = noises_[cond / snrs_.size()];
  const double snr = snrs_[cond % snrs_.size()];
  const audio::NoisyMixture m =
      audio::mix_at_snr(speech_.at(index), noise, snr, derive_seed(draw, {0x0ffULL}));
  se::TrainingExample ex;
  const Matrix& clean = clean_[index];
  if (crop_frames_ == 0 || clean.rows() <= crop_frames_) {
    ex.clean = clean;
    ex.noisy = extractor_.features(m.mixture).features;
    ex.noise = extractor_.features(m.noise_scaled).features;
    return ex;
  }
  const std::size_t offset =
      static_cast<std::size_t>(derive_seed(draw, {0xc0ULL}) % (clean.rows() - crop_frames_ + 1));
  ex.clean = clean.slice_rows(offset, crop_frames_);
  const std::size_t begin = offset * extractor_.window().hop;
  const std::size_t end = begin + (crop_frames_ - 1) * extractor_.window().hop + extractor_.window().window_len;
  const auto crop_features = [&](const audio::AudioSignal& s) {
    const audio::AudioSignal emphasized = dsp::pre_emphasize(s);
    const auto spec = dsp::power_spectrum(
        dsp::frame_and_window(segment(emphasized, begin, end), extractor_.window()), extractor_.window(),
        s.sample_rate);
    return extractor_.features(spec).features;
  };
  ex.noisy = crop_features(m.mixture);
  ex.noise = crop_features(m.noise_scaled);
  return ex;
}

audio::NoisyMixture test_mixture(const Corpus& corpus, const ExperimentConfig& cfg,
                                 std::size_t k, std::size_t u, double snr_db) {
  return audio::mix_at_snr(corpus.test.at(u), corpus.test_noise.at(k), snr_db,
                           derive_seed(cfg.seed, {0x7e57ULL, k, u}));
}

se::TrainResult train_system(const se::SeArchitecture& arch, const Corpus& corpus,
                             const ExperimentConfig& cfg, std::ostream* log) {
  const MixtureExamples train_set(corpus.train, corpus.train_noise, cfg.snrs,
                                  derive_seed(cfg.seed, {0x7a1ULL}), true, cfg.train.crop_frames);
  const MixtureExamples dev_set(corpus.dev, corpus.train_noise, cfg.snrs,
                                derive_seed(cfg.seed, {0xde7ULL}), false);
  se::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, {0x5eedULL, static_cast<std::uint64_t>(arch.kind),
                                   static_cast<std::uint64_t>(arch.causal)});
  const auto start = std::chrono::steady_clock::now();
  return se::train(arch, train_set, dev_set, tc, cfg.shape, [&](const se::EpochRecord& r) {
    if (!log) return;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    *log << arch.name() << " epoch " << r.epoch << " train " << r.train_mse << " dev "
         << r.dev_mse << " (" << static_cast<int>(secs) << " s)\n";
    log->flush();
  });
}

RunOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  RunOutput out;
  out.report.started = utc_timestamp("%Y-%m-%dT%H:%M:%SZ");
  out.report.config_hash = cfg.hash();
  out.run_dir = cfg.out_dir / (cfg.run_name.empty() ? "run-" + utc_timestamp("%Y%m%d-%H%M%S")
                                                    : cfg.run_name);
  std::error_code ec;
  std::filesystem::create_directories(out.run_dir, ec);
  if (ec) throw IoError("cannot create " + out.run_dir.string() + ": " + ec.message());

  const Corpus corpus = prepare_corpus(cfg, out.run_dir / "corpus");
  if (log) {
    *log << "corpus " << corpus.root.string() << ": " << corpus.train.size() << " train, "
         << corpus.dev.size() << " dev, " << corpus.test.size() << " test\n";
  }

  std::map<std::string, se::SeModel> models;
  for (const auto& system : cfg.systems) {
    if (!is_cnn(system) || models.count(system)) continue;
    const auto arch = se::SeArchitecture::Parse(system);
    se::TrainResult r = train_system(arch, corpus, cfg, log);
    se::write_history_csv(out.run_dir / ("history_" + system + ".csv"), r.history);
    se::SeModel model{arch, std::move(r.stats), std::move(r.network)};
    se::save_model(out.run_dir / ("model_" + system + ".cise"), model);
    if (log) *log << system << ": best epoch " << r.best_epoch << "\n";
    models.emplace(system, std::move(model));
  }

  const std::size_t n_noise = corpus.noise_names.size();
  const std::size_t n_snr = cfg.snrs.size();
  const std::size_t n_sys = cfg.systems.size();
  std::vector<double> sums(n_sys * n_noise * n_snr, 0.0);
  const ci::FeatureExtractor fx;
  for (std::size_t u = 0; u < corpus.test.size(); ++u) {
    const ci::CiFeatureSequence clean = fx.features(corpus.test[u]);
    for (std::size_t k = 0; k < n_noise; ++k) {
      for (std::size_t s = 0; s < n_snr; ++s) {
        const auto m = test_mixture(corpus, cfg, k, u, cfg.snrs[s]);
        const dsp::PowerSpectrogram spec = fx.spectrogram(m.mixture);
        const ci::CiFeatureSequence noisy = fx.features(spec);
        if (noisy.num_frames() != clean.num_frames()) {
          throw Error("frame mismatch for utterance " + corpus.test_ids[u]);
        }
        for (std::size_t j = 0; j < n_sys; ++j) {
          const std::string& system = cfg.systems[j];
          try {
            Matrix processed;
            if (system == "noisy") {
              processed = noisy.features;
            } else if (auto it = models.find(system); it != models.end()) {
              processed = se::enhance(noisy, it->second.network, it->second.arch,
                                      it->second.stats).features;
            } else {
              processed = classic_features(system, spec, fx);
            }
            sums[(j * n_noise + k) * n_snr + s] +=
                metrics::ecm(clean.features, processed, clean.frame_rate).value;
          } catch (const std::exception& e) {
            throw Error("utterance " + corpus.test_ids[u] + ", system " + system + ": " + e.what());
          }
        }
      }
    }
    if (log && (u + 1) % 20 == 0) *log << "scored " << (u + 1) << " test utterances\n";
  }

  const double n = static_cast<double>(corpus.test.size());
  for (std::size_t j = 0; j < n_sys; ++j) {
    for (std::size_t k = 0; k < n_noise; ++k) {
      for (std::size_t s = 0; s < n_snr; ++s) {
        out.report.records.push_back({cfg.systems[j], corpus.noise_names[k], cfg.snrs[s],
                                      sums[(j * n_noise + k) * n_snr + s] / n,
                                      corpus.test.size()});
      }
    }
  }
  out.report.finished = utc_timestamp("%Y-%m-%dT%H:%M:%SZ");

  std::ofstream info(out.run_dir / "run_info.txt");
  if (!info) throw IoError("cannot write run_info.txt in " + out.run_dir.string());
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(out.report.config_hash));
  info << "config_hash=" << hash_hex << "\nstarted=" << out.report.started
       << "\nfinished=" << out.report.finished << "\n" << cfg.to_text();
  return out;
}

void render_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  if (report.records.empty()) throw std::invalid_argument("render_report: empty report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream csv(out_dir / "report.csv");
  if (!csv) throw IoError("cannot write " + (out_dir / "report.csv").string());
  csv << kReportHeader << "\n";
  for (const auto& r : report.records) {
    csv << r.system << ',' << r.noise << ',' << format_double(r.snr_db) << ','
        << format_double(r.mean_ecm) << ',' << r.n << "\n";
  }
  if (!csv) throw IoError("write failed: " + (out_dir / "report.csv").string());

  std::vector<std::string> noises, systems;
  for (const auto& r : report.records) {
    if (std::find(noises.begin(), noises.end(), r.noise) == noises.end()) noises.push_back(r.noise);
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) {
      systems.push_back(r.system);
    }
  }
  for (const auto& noise : noises) {
    std::vector<raster::Series> series;
    for (const auto& system : systems) {
      raster::Series s{system, {}, {}};
      for (const auto& r : report.records) {
        if (r.noise == noise && r.system == system) {
          s.x.push_back(r.snr_db);
          s.y.push_back(r.mean_ecm);
        }
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    raster::ChartOptions opts;
    opts.title = "MEAN ECM - " + noise;
    opts.x_label = "SNR (DB)";
    opts.y_label = "MEAN ECM";
    raster::render_line_chart(out_dir / ("ecm_" + noise + ".png"), series, opts);
  }
}

ExperimentReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kReportHeader) {
    throw FormatError(path.string() + ": missing header");
  }
  ExperimentReport report;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 5) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad row");
    try {
      report.records.push_back({f[0], f[1], parse_double("snr_db", f[2]),
                                parse_double("mean_ecm", f[3]), parse_uint("n", f[4])});
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return report;
}

}  // namespace cise::experiment
