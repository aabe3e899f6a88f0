// Copyright 2026 The mcgasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mcgasr/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace mcgasr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTemplatePeak = 0.35;
constexpr double kNoisePeak = 0.35;
constexpr double kMixPeakLimit = 0.99;

double mean_power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

void peak_normalize(std::vector<double>& x, double target) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) return;
  const double g = target / peak;
  for (double& v : x) v *= g;
}

std::string zero_pad(int v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

std::vector<UtteranceRecord> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(str_cat("cannot open manifest ", path));
  std::vector<UtteranceRecord> out;
  std::set<std::string> seen;
  std::string line;
  Index line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    UtteranceRecord rec;
    if (!(ls >> rec.id >> rec.wav_path)) {
      throw IoError(str_cat("manifest ", path, " line ", line_no, ": expected id and wav path"));
    }
    int tok = 0;
    while (ls >> tok) {
      if (tok < 1) {
        throw IoError(str_cat("manifest ", path, " line ", line_no, ": token id ", tok,
                              " is not positive"));
      }
      rec.tokens.push_back(tok);
    }
    if (!ls.eof()) {
      throw IoError(str_cat("manifest ", path, " line ", line_no, ": non-integer token"));
    }
    if (rec.tokens.empty()) {
      throw IoError(str_cat("manifest ", path, " line ", line_no, ": empty transcript"));
    }
    if (!seen.insert(rec.id).second) {
      throw IoError(str_cat("manifest ", path, " line ", line_no, ": duplicate id ", rec.id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(str_cat("cannot write manifest ", path));
  for (const auto& rec : records) {
    if (rec.tokens.empty()) {
      throw ConfigError(str_cat("record ", rec.id, " has an empty transcript"));
    }
    os << rec.id << " " << rec.wav_path;
    for (int t : rec.tokens) os << " " << t;
    os << "\n";
  }
  if (!os) throw IoError(str_cat("failed writing manifest ", path));
}

int max_token_id(const std::vector<UtteranceRecord>& records) {
  int vmax = 0;
  for (const auto& rec : records) {
    for (int t : rec.tokens) vmax = std::max(vmax, t);
  }
  return vmax;
}

// ---------------------------------------------------------------------------
// Toy corpus synthesis
// ---------------------------------------------------------------------------

void ToyCorpusConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("toy corpus: out_dir is empty");
  if (vocab < 1) throw ConfigError("toy corpus: vocab must be at least 1");
  if (num_train < 0 || num_dev < 0 || num_test < 0) {
    throw ConfigError("toy corpus: split sizes must be non-negative");
  }
  if (min_tokens < 1) throw ConfigError("toy corpus: min_tokens must be at least 1");
  if (max_tokens < min_tokens) throw ConfigError("toy corpus: max_tokens below min_tokens");
  if (token_seconds <= 0.0) throw ConfigError("toy corpus: token_seconds must be positive");
  if (gap_seconds < 0.0 || edge_seconds < 0.0) {
    throw ConfigError("toy corpus: silence durations must be non-negative");
  }
  if (num_white_noise < 0 || num_babble_noise < 0) {
    throw ConfigError("toy corpus: noise counts must be non-negative");
  }
  if (noise_seconds <= 0.0) throw ConfigError("toy corpus: noise_seconds must be positive");
  if (sample_rate <= 0) throw ConfigError("toy corpus: sample rate must be positive");
}

Waveform token_template(int token, int sample_rate, double seconds) {
  if (token < 1) throw ConfigError(str_cat("token id ", token, " is not positive"));
  if (sample_rate <= 0) throw ConfigError("token template: sample rate must be positive");
  const Index n = static_cast<Index>(std::lrint(seconds * sample_rate));
  if (n < 1) throw ConfigError("token template: duration rounds to zero samples");
  const double f1 = 250.0 + 60.0 * token;
  const double f2 = 1200.0 + 90.0 * token;
  if (f2 >= 0.45 * sample_rate) {
    throw ConfigError(str_cat("token id ", token, " needs ", f2, " Hz, too close to Nyquist at ",
                              sample_rate, " Hz"));
  }
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(static_cast<size_t>(n));
  const Index fade = std::min<Index>(n / 2, std::lrint(0.010 * sample_rate));
  for (Index i = 0; i < n; ++i) {
    const double ph = 2.0 * kPi * static_cast<double>(i) / sample_rate;
    double v = kTemplatePeak * (0.7 * std::sin(f1 * ph) + 0.3 * std::sin(f2 * ph));
    if (fade > 0) {
      double ramp = 1.0;
      if (i < fade) ramp = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / fade);
      const Index j = n - 1 - i;
      if (j < fade) ramp = std::min(ramp, 0.5 - 0.5 * std::cos(kPi * static_cast<double>(j) / fade));
      v *= ramp;
    }
    w.samples[static_cast<size_t>(i)] = v;
  }
  return w;
}

Waveform render_tokens(const std::vector<int>& tokens, const ToyCorpusConfig& cfg) {
  if (tokens.empty()) throw ConfigError("render_tokens: empty transcript");
  const Index edge = static_cast<Index>(std::lrint(cfg.edge_seconds * cfg.sample_rate));
  const Index gap = static_cast<Index>(std::lrint(cfg.gap_seconds * cfg.sample_rate));
  Waveform out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(static_cast<size_t>(edge), 0.0);
  for (size_t k = 0; k < tokens.size(); ++k) {
    const Waveform tone = token_template(tokens[k], cfg.sample_rate, cfg.token_seconds);
    out.samples.insert(out.samples.end(), tone.samples.begin(), tone.samples.end());
    if (k + 1 < tokens.size()) {
      out.samples.insert(out.samples.end(), static_cast<size_t>(gap), 0.0);
    }
  }
  out.samples.insert(out.samples.end(), static_cast<size_t>(edge), 0.0);
  return out;
}

namespace {

Waveform make_noise(Rng& rng, int sample_rate, double seconds, bool babble) {
  const Index n = static_cast<Index>(std::lrint(seconds * sample_rate));
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(static_cast<size_t>(n));
  double prev = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double x = rng.normal(0.0, 1.0);
    double v = x;
    if (babble) {
      // one-pole lowpass shapes white noise toward a speech-like tilt
      v = 0.7 * prev + 0.3 * x;
      prev = v;
    }
    w.samples[static_cast<size_t>(i)] = v;
  }
  peak_normalize(w.samples, kNoisePeak);
  return w;
}

std::vector<int> draw_tokens(Rng& rng, const ToyCorpusConfig& cfg) {
  const std::uint64_t span = static_cast<std::uint64_t>(cfg.max_tokens - cfg.min_tokens + 1);
  const int len = cfg.min_tokens + static_cast<int>(rng.uniform_index(span));
  std::vector<int> tokens(static_cast<size_t>(len));
  for (int& t : tokens) {
    t = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cfg.vocab)));
  }
  return tokens;
}

}  // namespace

SynthResult synth_toy_corpus(const ToyCorpusConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(cfg.out_dir) / "wav", ec);
  if (ec) throw IoError(str_cat("cannot create ", cfg.out_dir, "/wav: ", ec.message()));
  fs::create_directories(fs::path(cfg.out_dir) / "noise", ec);
  if (ec) throw IoError(str_cat("cannot create ", cfg.out_dir, "/noise: ", ec.message()));

  const Rng root(cfg.seed);
  SynthResult res;

  for (int i = 0; i < cfg.num_white_noise; ++i) {
    Rng r = root.child("noise.white", static_cast<std::uint64_t>(i));
    const Waveform w = make_noise(r, cfg.sample_rate, cfg.noise_seconds, false);
    const std::string path = (fs::path(cfg.out_dir) / "noise" / ("white_" + zero_pad(i, 2) + ".wav")).string();
    write_wav(path, w);
    res.noise_paths.push_back(path);
  }
  for (int i = 0; i < cfg.num_babble_noise; ++i) {
    Rng r = root.child("noise.babble", static_cast<std::uint64_t>(i));
    const Waveform w = make_noise(r, cfg.sample_rate, cfg.noise_seconds, true);
    const std::string path = (fs::path(cfg.out_dir) / "noise" / ("babble_" + zero_pad(i, 2) + ".wav")).string();
    write_wav(path, w);
    res.noise_paths.push_back(path);
  }

  const std::pair<std::string, int> splits[] = {
      {"train", cfg.num_train}, {"dev", cfg.num_dev}, {"test", cfg.num_test}};
  for (const auto& [split, count] : splits) {
    std::vector<UtteranceRecord> records;
    for (int i = 0; i < count; ++i) {
      Rng r = root.child("utt." + split, static_cast<std::uint64_t>(i));
      UtteranceRecord rec;
      rec.id = split + "_" + zero_pad(i, 4);
      rec.tokens = draw_tokens(r, cfg);
      rec.wav_path = (fs::path(cfg.out_dir) / "wav" / (rec.id + ".wav")).string();
      write_wav(rec.wav_path, render_tokens(rec.tokens, cfg));
      records.push_back(std::move(rec));
      ++res.num_utterances;
    }
    const std::string manifest = (fs::path(cfg.out_dir) / (split + ".manifest")).string();
    write_manifest(manifest, records);
    if (split == "train") res.train_manifest = manifest;
    if (split == "dev") res.dev_manifest = manifest;
    if (split == "test") res.test_manifest = manifest;
  }
  return res;
}

std::vector<std::string> find_noise_files(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(str_cat("noise directory ", dir, " not found"));
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      out.push_back(entry.path().string());
    }
  }
  if (ec) throw IoError(str_cat("cannot list noise directory ", dir, ": ", ec.message()));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// SNR mixing
// ---------------------------------------------------------------------------

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, const MixSpec& spec) {
  if (clean.sample_rate != noise.sample_rate) {
    throw ConfigError(str_cat("mix_at_snr: sample rates differ (", clean.sample_rate, " vs ",
                              noise.sample_rate, ")"));
  }
  if (clean.samples.empty()) throw ConfigError("mix_at_snr: clean waveform is empty");
  if (noise.samples.empty()) throw ConfigError("mix_at_snr: noise waveform is empty");
  if (spec.crop_offset < 0) throw ConfigError("mix_at_snr: crop offset must be non-negative");

  const Index n = static_cast<Index>(clean.samples.size());
  const Index m = static_cast<Index>(noise.samples.size());
  const Index start = spec.crop_offset % m;

  MixResult res;
  res.looped = (spec.crop_offset >= m) || (start + n > m);

  std::vector<double> crop(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    crop[static_cast<size_t>(i)] = noise.samples[static_cast<size_t>((start + i) % m)];
  }

  const double p_clean = mean_power(clean.samples);
  const double p_noise = mean_power(crop);
  if (p_clean <= 0.0) throw NumericError("mix_at_snr: clean waveform has zero power");
  if (p_noise <= 0.0) throw NumericError("mix_at_snr: noise crop has zero power");

  res.noise_gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));

  res.mixture.sample_rate = clean.sample_rate;
  res.mixture.samples.resize(static_cast<size_t>(n));
  double peak = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double v = clean.samples[static_cast<size_t>(i)] +
                     res.noise_gain * crop[static_cast<size_t>(i)];
    res.mixture.samples[static_cast<size_t>(i)] = v;
    peak = std::max(peak, std::abs(v));
  }
  // rescaling mixture and implied clean part together preserves the ratio
  res.peak_gain = peak > kMixPeakLimit ? kMixPeakLimit / peak : 1.0;
  if (res.peak_gain != 1.0) {
    for (double& v : res.mixture.samples) v *= res.peak_gain;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

template <typename T>
Batcher<T>::Batcher(const std::vector<UtteranceRecord>& records,
                    const std::vector<Waveform>& noises, const ThresholdSet& thresholds,
                    const Config& cfg)
    : cfg_(cfg), thresholds_(thresholds), noises_(noises) {
  if (cfg_.batch_size < 1) throw ConfigError("batcher: batch size must be at least 1");
  if (cfg_.snr_hi < cfg_.snr_lo) throw ConfigError("batcher: snr_hi below snr_lo");
  if (records.empty()) throw ConfigError("batcher: manifest has no utterances");
  if (noises_.empty()) throw ConfigError("batcher: no noise files to mix with");
  if (thresholds_.n() < 1) throw ConfigError("batcher: threshold set has no offsets");
  if (thresholds_.q != cfg_.fbank.q) {
    throw ConfigError(str_cat("batcher: thresholds built for ", thresholds_.q,
                              " bands but features have ", cfg_.fbank.q));
  }
  for (const auto& rec : records) {
    Item item;
    item.record = rec;
    item.clean = read_wav(rec.wav_path);
    const Index win =
        static_cast<Index>(std::lrint(cfg_.stft.win_ms * item.clean.sample_rate / 1000.0));
    const Index hop =
        static_cast<Index>(std::lrint(cfg_.stft.hop_ms * item.clean.sample_rate / 1000.0));
    if (win <= 0 || hop <= 0) throw ConfigError("batcher: window and hop must be positive");
    const Index samples = static_cast<Index>(item.clean.samples.size());
    if (samples < win) {
      ++skipped_;
      continue;
    }
    item.frames = 1 + (samples - win) / hop;
    if (cfg_.max_frames > 0 && item.frames > cfg_.max_frames) {
      ++skipped_;
      continue;
    }
    items_.push_back(std::move(item));
  }
  if (items_.empty()) {
    throw ConfigError(str_cat("batcher: all ", records.size(),
                              " utterances were skipped (too short or over the frame budget)"));
  }
}

template <typename T>
Index Batcher<T>::num_batches() const {
  const Index n = static_cast<Index>(items_.size());
  return (n + cfg_.batch_size - 1) / cfg_.batch_size;
}

template <typename T>
std::vector<Index> Batcher<T>::epoch_order(Index epoch) const {
  std::vector<Index> order(items_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  Rng r(Rng(cfg_.seed).derive_seed("epoch.order", static_cast<std::uint64_t>(epoch)));
  r.shuffle(order);
  return order;
}

template <typename T>
Batch<T> Batcher<T>::batch(Index epoch, Index index) const {
  if (index < 0 || index >= num_batches()) {
    throw ConfigError(str_cat("batcher: batch index ", index, " out of range (",
                              num_batches(), " batches)"));
  }
  const std::vector<Index> order = epoch_order(epoch);
  const Index begin = index * cfg_.batch_size;
  const Index end = std::min<Index>(begin + cfg_.batch_size, static_cast<Index>(items_.size()));
  const Index b = end - begin;
  const Index q = cfg_.fbank.q;
  const Index n_eps = thresholds_.n();

  Index t_max = 0;
  for (Index k = begin; k < end; ++k) {
    t_max = std::max(t_max, items_[static_cast<size_t>(order[static_cast<size_t>(k)])].frames);
  }

  std::vector<T> noisy_v(static_cast<size_t>(b * t_max * q), T(0));
  std::vector<T> clean_v(static_cast<size_t>(b * t_max * q), T(0));
  std::vector<T> mask_v(static_cast<size_t>(b * t_max), T(0));
  std::vector<std::vector<T>> label_v(static_cast<size_t>(n_eps));
  for (auto& lv : label_v) lv.assign(static_cast<size_t>(b * t_max * q), T(0));

  Batch<T> out;
  const Rng root(cfg_.seed);
  for (Index bi = 0; bi < b; ++bi) {
    const Item& item = items_[static_cast<size_t>(order[static_cast<size_t>(begin + bi)])];

    const LogFbank clean_feat = wav_to_log_fbank(item.clean, cfg_.stft, cfg_.fbank);
    const std::vector<GateLabel> labels = make_gate_labels(clean_feat, thresholds_);

    const std::uint64_t epoch_key =
        cfg_.redraw_noise_each_epoch ? static_cast<std::uint64_t>(epoch) : 0;
    MixSpec spec;
    spec.seed = root.derive_seed(str_cat("mix.", item.record.id), epoch_key);
    Rng mr(spec.seed);
    spec.noise_id = static_cast<Index>(mr.uniform_index(noises_.size()));
    spec.snr_db = mr.uniform(cfg_.snr_lo, cfg_.snr_hi);
    const Waveform& noise = noises_[static_cast<size_t>(spec.noise_id)];
    spec.crop_offset = static_cast<Index>(mr.uniform_index(noise.samples.size()));

    const MixResult mixed = mix_at_snr(item.clean, noise, spec);
    const LogFbank noisy_feat = wav_to_log_fbank(mixed.mixture, cfg_.stft, cfg_.fbank);
    if (noisy_feat.t != clean_feat.t || clean_feat.t != item.frames || noisy_feat.q != q) {
      throw Error(str_cat("batcher: framing mismatch for ", item.record.id));
    }

    for (Index ti = 0; ti < item.frames; ++ti) {
      mask_v[static_cast<size_t>(bi * t_max + ti)] = T(1);
      for (Index qi = 0; qi < q; ++qi) {
        const size_t dst = static_cast<size_t>((bi * t_max + ti) * q + qi);
        noisy_v[dst] = static_cast<T>(noisy_feat.at(ti, qi));
        clean_v[dst] = static_cast<T>(clean_feat.at(ti, qi));
        for (Index e = 0; e < n_eps; ++e) {
          label_v[static_cast<size_t>(e)][dst] = static_cast<T>(labels[static_cast<size_t>(e)].at(ti, qi));
        }
      }
    }
    out.lengths.push_back(item.frames);
    out.tokens.push_back(item.record.tokens);
    out.ids.push_back(item.record.id);
    out.snrs.push_back(spec.snr_db);
  }

  out.noisy = Tensor<T>::from_data({b, t_max, q}, std::move(noisy_v));
  out.clean = Tensor<T>::from_data({b, t_max, q}, std::move(clean_v));
  out.frame_mask = Tensor<T>::from_data({b, t_max}, std::move(mask_v));
  for (auto& lv : label_v) {
    out.labels.push_back(Tensor<T>::from_data({b, t_max, q}, std::move(lv)));
  }
  return out;
}

template class Batcher<float>;
template class Batcher<double>;

}  // namespace mcgasr
