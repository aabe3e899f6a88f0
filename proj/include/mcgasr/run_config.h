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

#ifndef MCGASR_RUN_CONFIG_H_
#define MCGASR_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mcgasr/conformer.h"
#include "mcgasr/dsp.h"
#include "mcgasr/mcg_model.h"

namespace mcgasr {

// Everything one run needs: model sizes, thresholds, loss weights, schedule
// constants, and paths. Two presets exist; "desk" trains in minutes on one
// core, "full" is the published-scale geometry.
struct RunConfig {
  std::string preset = "desk";  // "desk" or "full"

  // gates; the gate count is always the number of offsets
  std::vector<double> epsilons = {-1.0, 1.0, 2.0};
  Index head_channels = 10;

  // features
  StftConfig stft;
  FbankConfig fbank;

  // loss weights
  double w_gate = 1.0;
  double w_filtered = 1.0;
  double w_encoder = 1.0;
  double w_ctc = 1.0;

  // optimization
  Index batch_size = 4;
  std::uint64_t seed = 1;
  double lr = 2e-4;
  double decay_factor = 0.5;
  int plateau_patience = 5;
  int stop_patience = 20;
  int max_epochs = 60;
  double grad_clip = 5.0;  // zero or negative disables clipping
  bool plateau_on_ctc = false;  // schedule on dev CTC loss instead of the total
  double dropout = 0.0;

  // data
  std::string corpus_dir;
  std::string train_manifest;  // defaults to <corpus_dir>/train.manifest
  std::string dev_manifest;
  std::string test_manifest;
  std::string stats_path;  // defaults to <corpus_dir>/stats.bin
  std::string noise_dir;   // defaults to <corpus_dir>/noise
  Index max_frames = 0;    // 0 disables the per-clip frame budget
  double snr_lo = -5.0;
  double snr_hi = 20.0;
  bool redraw_noise = true;

  // output
  std::string out_dir = "run";

  // evaluation conditions: clean plus one noisy condition per entry
  std::vector<double> eval_snrs = {0.0};
  bool eval_per_utterance = false;

  Index num_gates() const { return static_cast<Index>(epsilons.size()); }

  static RunConfig desk();
  static RunConfig full();

  // Fills derived path defaults from corpus_dir and prefixes a relative
  // out_dir with the MCGASR_OUT_ROOT environment variable when it is set.
  void finalize();
  void validate() const;

  McgConfig mcg() const;
  ConformerConfig asr(Index vocab) const;
};

// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> read_kv_file(const std::string& path);

// Applies keys onto cfg; unknown keys or unparsable values throw
// ConfigError. "preset" is not accepted here (it selects the base config
// before overrides apply).
void apply_kv(RunConfig& cfg, const std::map<std::string, std::string>& kv);

// Preset base, then file keys, then command-line overrides ("key=value"),
// then finalize() and validate().
RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides);

// The resolved configuration in the same key = value format.
std::string run_config_to_text(const RunConfig& cfg);

}  // namespace mcgasr

#endif  // MCGASR_RUN_CONFIG_H_
