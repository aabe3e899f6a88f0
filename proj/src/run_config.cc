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

#include "mcgasr/run_config.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "mcgasr/common.h"

namespace mcgasr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(str_cat("config key ", key, ": '", value, "' is not a number"));
  }
  if (pos != value.size()) {
    throw ConfigError(str_cat("config key ", key, ": '", value, "' is not a number"));
  }
  return v;
}

Index parse_index(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const Index i = static_cast<Index>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError(str_cat("config key ", key, ": '", value, "' is not an integer"));
  }
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError(str_cat("config key ", key, ": '", value, "' is not a boolean"));
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(str_cat("config key ", key, ": empty list entry"));
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError(str_cat("config key ", key, ": empty list"));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

}  // namespace

RunConfig RunConfig::desk() {
  RunConfig cfg;
  cfg.preset = "desk";
  cfg.fbank.q = 40;
  cfg.batch_size = 4;
  cfg.dropout = 0.0;
  return cfg;
}

RunConfig RunConfig::full() {
  RunConfig cfg;
  cfg.preset = "full";
  cfg.fbank.q = 80;
  cfg.batch_size = 32;
  cfg.dropout = 0.1;
  cfg.max_epochs = 100;
  return cfg;
}

void RunConfig::finalize() {
  namespace fs = std::filesystem;
  if (!corpus_dir.empty()) {
    if (train_manifest.empty()) train_manifest = (fs::path(corpus_dir) / "train.manifest").string();
    if (dev_manifest.empty()) dev_manifest = (fs::path(corpus_dir) / "dev.manifest").string();
    if (test_manifest.empty()) test_manifest = (fs::path(corpus_dir) / "test.manifest").string();
    if (stats_path.empty()) stats_path = (fs::path(corpus_dir) / "stats.bin").string();
    if (noise_dir.empty()) noise_dir = (fs::path(corpus_dir) / "noise").string();
  }
  const char* root = std::getenv("MCGASR_OUT_ROOT");
  if (root != nullptr && root[0] != '\0' && !fs::path(out_dir).is_absolute()) {
    out_dir = (fs::path(root) / out_dir).string();
  }
}

void RunConfig::validate() const {
  if (preset != "desk" && preset != "full") {
    throw ConfigError(str_cat("unknown preset '", preset, "' (expected desk or full)"));
  }
  if (epsilons.empty()) throw ConfigError("epsilons must be non-empty");
  for (size_t i = 1; i < epsilons.size(); ++i) {
    if (epsilons[i] <= epsilons[i - 1]) {
      throw ConfigError("epsilons must be strictly ascending");
    }
  }
  if (head_channels < 1) throw ConfigError("head_channels must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (lr <= 0) throw ConfigError("lr must be positive");
  if (decay_factor <= 0 || decay_factor >= 1) throw ConfigError("decay_factor must be in (0, 1)");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be positive");
  if (stop_patience < 1) throw ConfigError("stop_patience must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
  if (snr_hi < snr_lo) throw ConfigError("snr_hi below snr_lo");
  if (max_frames < 0) throw ConfigError("max_frames must be non-negative");
  mcg().validate();
  asr(1).validate();
}

McgConfig RunConfig::mcg() const {
  McgConfig cfg = preset == "full" ? McgConfig::full(num_gates()) : McgConfig::small(num_gates());
  cfg.q = fbank.q;
  cfg.head_channels = head_channels;
  return cfg;
}

ConformerConfig RunConfig::asr(Index vocab) const {
  ConformerConfig cfg = preset == "full" ? ConformerConfig::full(vocab, fbank.q)
                                         : ConformerConfig::small(vocab, fbank.q);
  cfg.dropout = dropout;
  return cfg;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(str_cat("cannot open config file ", path));
  std::map<std::string, std::string> kv;
  std::string line;
  Index line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(str_cat("config file ", path, " line ", line_no, ": expected key = value"));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(str_cat("config file ", path, " line ", line_no, ": empty key"));
    }
    kv[key] = value;
  }
  return kv;
}

void apply_kv(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"model.epsilons",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.epsilons = parse_double_list(k, v);
       }},
      {"model.head_channels",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.head_channels = parse_index(k, v);
       }},
      {"feat.q",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fbank.q = parse_index(k, v);
       }},
      {"feat.win_ms",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.stft.win_ms = parse_double(k, v);
       }},
      {"feat.hop_ms",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.stft.hop_ms = parse_double(k, v);
       }},
      {"feat.n_fft",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.stft.n_fft = static_cast<int>(parse_index(k, v));
       }},
      {"feat.f_min",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fbank.f_min = parse_double(k, v);
       }},
      {"feat.f_max",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fbank.f_max = parse_double(k, v);
       }},
      {"feat.scale",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "mel") {
           c.fbank.scale = FilterbankScale::kMel;
         } else if (v == "bark") {
           c.fbank.scale = FilterbankScale::kBark;
         } else {
           throw ConfigError(str_cat("config key ", k, ": '", v, "' is not mel or bark"));
         }
       }},
      {"loss.gate",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.w_gate = parse_double(k, v);
       }},
      {"loss.filtered",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.w_filtered = parse_double(k, v);
       }},
      {"loss.encoder",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.w_encoder = parse_double(k, v);
       }},
      {"loss.ctc",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.w_ctc = parse_double(k, v);
       }},
      {"train.batch_size",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.batch_size = parse_index(k, v);
       }},
      {"train.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(parse_index(k, v));
       }},
      {"train.lr",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lr = parse_double(k, v);
       }},
      {"train.decay",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decay_factor = parse_double(k, v);
       }},
      {"train.plateau_patience",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.plateau_patience = static_cast<int>(parse_index(k, v));
       }},
      {"train.stop_patience",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.stop_patience = static_cast<int>(parse_index(k, v));
       }},
      {"train.max_epochs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.max_epochs = static_cast<int>(parse_index(k, v));
       }},
      {"train.grad_clip",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grad_clip = parse_double(k, v);
       }},
      {"train.plateau_metric",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "total") {
           c.plateau_on_ctc = false;
         } else if (v == "ctc") {
           c.plateau_on_ctc = true;
         } else {
           throw ConfigError(str_cat("config key ", k, ": '", v, "' is not total or ctc"));
         }
       }},
      {"train.dropout",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.dropout = parse_double(k, v);
       }},
      {"data.corpus_dir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.corpus_dir = v; }},
      {"data.train_manifest",
       [](RunConfig& c, const std::string&, const std::string& v) { c.train_manifest = v; }},
      {"data.dev_manifest",
       [](RunConfig& c, const std::string&, const std::string& v) { c.dev_manifest = v; }},
      {"data.test_manifest",
       [](RunConfig& c, const std::string&, const std::string& v) { c.test_manifest = v; }},
      {"data.stats",
       [](RunConfig& c, const std::string&, const std::string& v) { c.stats_path = v; }},
      {"data.noise_dir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.noise_dir = v; }},
      {"data.max_frames",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.max_frames = parse_index(k, v);
       }},
      {"data.snr_lo",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.snr_lo = parse_double(k, v);
       }},
      {"data.snr_hi",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.snr_hi = parse_double(k, v);
       }},
      {"data.redraw_noise",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.redraw_noise = parse_bool(k, v);
       }},
      {"out.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"eval.snrs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.eval_snrs = parse_double_list(k, v);
       }},
      {"eval.per_utterance",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.eval_per_utterance = parse_bool(k, v);
       }},
  };

  for (const auto& [key, value] : kv) {
    if (key == "preset") continue;  // consumed before overrides apply
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(str_cat("unknown config key '", key, "'"));
    it->second(cfg, key, value);
  }
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = read_kv_file(config_path);
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(str_cat("override '", ov, "' is not key=value"));
    }
    kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
  }

  std::string preset = "desk";
  const auto it = kv.find("preset");
  if (it != kv.end()) preset = it->second;
  RunConfig cfg;
  if (preset == "desk") {
    cfg = RunConfig::desk();
  } else if (preset == "full") {
    cfg = RunConfig::full();
  } else {
    throw ConfigError(str_cat("unknown preset '", preset, "' (expected desk or full)"));
  }

  apply_kv(cfg, kv);
  cfg.finalize();
  cfg.validate();
  return cfg;
}

std::string run_config_to_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "preset = " << cfg.preset << "\n";
  os << "model.epsilons = " << join_doubles(cfg.epsilons) << "\n";
  os << "model.head_channels = " << cfg.head_channels << "\n";
  os << "feat.q = " << cfg.fbank.q << "\n";
  os << "feat.win_ms = " << cfg.stft.win_ms << "\n";
  os << "feat.hop_ms = " << cfg.stft.hop_ms << "\n";
  os << "feat.n_fft = " << cfg.stft.n_fft << "\n";
  os << "feat.f_min = " << cfg.fbank.f_min << "\n";
  os << "feat.f_max = " << cfg.fbank.f_max << "\n";
  os << "feat.scale = " << (cfg.fbank.scale == FilterbankScale::kMel ? "mel" : "bark") << "\n";
  os << "loss.gate = " << cfg.w_gate << "\n";
  os << "loss.filtered = " << cfg.w_filtered << "\n";
  os << "loss.encoder = " << cfg.w_encoder << "\n";
  os << "loss.ctc = " << cfg.w_ctc << "\n";
  os << "train.batch_size = " << cfg.batch_size << "\n";
  os << "train.seed = " << cfg.seed << "\n";
  os << "train.lr = " << cfg.lr << "\n";
  os << "train.decay = " << cfg.decay_factor << "\n";
  os << "train.plateau_patience = " << cfg.plateau_patience << "\n";
  os << "train.stop_patience = " << cfg.stop_patience << "\n";
  os << "train.max_epochs = " << cfg.max_epochs << "\n";
  os << "train.grad_clip = " << cfg.grad_clip << "\n";
  os << "train.plateau_metric = " << (cfg.plateau_on_ctc ? "ctc" : "total") << "\n";
  os << "train.dropout = " << cfg.dropout << "\n";
  os << "data.corpus_dir = " << cfg.corpus_dir << "\n";
  os << "data.train_manifest = " << cfg.train_manifest << "\n";
  os << "data.dev_manifest = " << cfg.dev_manifest << "\n";
  os << "data.test_manifest = " << cfg.test_manifest << "\n";
  os << "data.stats = " << cfg.stats_path << "\n";
  os << "data.noise_dir = " << cfg.noise_dir << "\n";
  os << "data.max_frames = " << cfg.max_frames << "\n";
  os << "data.snr_lo = " << cfg.snr_lo << "\n";
  os << "data.snr_hi = " << cfg.snr_hi << "\n";
  os << "data.redraw_noise = " << (cfg.redraw_noise ? 1 : 0) << "\n";
  os << "out.dir = " << cfg.out_dir << "\n";
  os << "eval.snrs = " << join_doubles(cfg.eval_snrs) << "\n";
  os << "eval.per_utterance = " << (cfg.eval_per_utterance ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace mcgasr
