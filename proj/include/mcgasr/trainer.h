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

#ifndef MCGASR_TRAINER_H_
#define MCGASR_TRAINER_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mcgasr/checkpoint.h"
#include "mcgasr/conformer.h"
#include "mcgasr/data.h"
#include "mcgasr/losses.h"
#include "mcgasr/mcg_model.h"
#include "mcgasr/metrics.h"
#include "mcgasr/optim.h"
#include "mcgasr/run_config.h"

namespace mcgasr {

// Gate network and recognizer sharing one parameter map, plus everything a
// checkpoint must carry to rebuild them: model geometry, threshold offsets,
// and the feature frontend settings.
template <typename T>
struct JointModel {
  McgConfig mcg_cfg;
  ConformerConfig asr_cfg;
  std::vector<double> epsilons;
  StftConfig stft;
  FbankConfig fbank;
  ParamMap<T> params;
  std::optional<McgModel<T>> mcg;
  std::optional<ConformerAsr<T>> asr;

  Index vocab() const { return asr_cfg.vocab; }

  // Fresh seeded initialization from a run configuration.
  static JointModel<T> init(const RunConfig& cfg, Index vocab);
  // Rebuild geometry from checkpoint metadata, then load the weights.
  static JointModel<T> from_checkpoint(const Checkpoint& ck);

  void write_structure_meta(Checkpoint& ck) const;
};

struct TrainStepLog {
  Index epoch = 0;
  Index batch_index = 0;
  std::int64_t global_step = 0;
  double l_g = 0, l_r = 0, l_o = 0, l_ctc = 0, total = 0;
  double lr = 0;
  double grad_norm = 0;
};

struct TrainResult {
  Index epochs_run = 0;
  std::int64_t steps = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::string best_checkpoint;
  std::string last_checkpoint;
  std::string log_path;
  bool plateau_stopped = false;
  std::vector<double> epoch_train_loss;  // mean step total per epoch
  std::vector<double> epoch_val_metric;  // exactly what drove the schedule
};

// Joint training: the noisy branch runs gates -> filtered features -> fusion
// -> recognizer with gradients; the clean branch repeats the forward pass
// with gradient recording off, so its outputs act as constant targets. Batch
// content, parameter init, dropout, and mixing draws all derive from the run
// seed, which makes every run reproducible and resumable.
template <typename T>
class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  // Losses for one batch. noisy_mode selects training or evaluation
  // behavior; the clean branch never updates normalization statistics.
  JointLossBreakdown<T> forward_losses(const Batch<T>& batch, BnMode noisy_mode,
                                       Rng* dropout_rng) const;

  // One optimization step on batch (epoch, batch_index).
  TrainStepLog train_step(Index epoch, Index batch_index);

  // Dev-set means per utterance under evaluation mode.
  void validation_losses(double* total, double* ctc) const;

  // Full loop: steps, validation, plateau schedule, checkpointing.
  TrainResult run();

  void save_checkpoint(const std::string& path, Index next_epoch) const;
  // Restores weights, optimizer moments, and schedule counters.
  void restore(const std::string& checkpoint_path);

  JointModel<T>& model() { return model_; }
  const JointModel<T>& model() const { return model_; }
  Adam<T>& optimizer() { return opt_; }
  PlateauSchedule& schedule() { return sched_; }
  Batcher<T>& train_batcher() { return *train_batcher_; }
  Batcher<T>& dev_batcher() { return *dev_batcher_; }
  Index start_epoch() const { return start_epoch_; }
  std::int64_t global_step() const { return global_step_; }
  const RunConfig& config() const { return cfg_; }

 private:
  RunConfig cfg_;
  JointModel<T> model_;
  std::optional<Batcher<T>> train_batcher_;
  std::optional<Batcher<T>> dev_batcher_;
  Adam<T> opt_{typename Adam<T>::Config{}};
  PlateauSchedule sched_{PlateauSchedule::Config{}};
  Index start_epoch_ = 0;
  std::int64_t global_step_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::vector<double> snrs = {0.0};  // noisy conditions; clean always runs
  std::uint64_t seed = 1;            // noise choice and crop per utterance
  bool per_utterance = false;
};

struct ConditionReport {
  std::string name;
  double snr_db = 0.0;  // meaningless for the clean condition
  bool is_clean = false;
  WerSummary wer;
  Index skipped = 0;  // clips too short for the recognizer
};

struct PerUtteranceRow {
  std::string condition;
  std::string id;
  AlignmentCounts counts;
  std::vector<Index> hyp;
};

struct EvalReport {
  std::vector<ConditionReport> conditions;
  std::vector<PerUtteranceRow> rows;  // filled when per_utterance is set

  // Plain-text table: one row per condition with S, D, I, WER (corpus
  // percentages plus per-utterance means).
  std::string to_text() const;
  std::string rows_tsv() const;
};

// Greedy-decodes every utterance under each condition. Noisy conditions mix
// deterministically per (seed, utterance, condition). Throws ConfigError
// when the manifest's token ids exceed the model's vocabulary.
template <typename T>
EvalReport evaluate_model(const JointModel<T>& model, const std::vector<UtteranceRecord>& records,
                          const std::vector<Waveform>& noises, const EvalOptions& opts);

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  Index n = 0;
  std::vector<double> epsilons;
};

struct SweepCellResult {
  SweepCell cell;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::string checkpoint;
};

struct SweepResult {
  std::vector<SweepCellResult> cells;
  std::vector<std::string> condition_names;

  // One row per cell: n, offsets, WER per condition (or the failure).
  std::string to_text() const;
};

// "n:eps,eps;...", for example "1:0;2:-1,1;3:-1,1,2;4:-2,-1,1,2".
std::vector<SweepCell> parse_sweep_grid(const std::string& text);
std::vector<SweepCell> default_sweep_grid();

// Trains and evaluates one model per cell with the shared seed and corpus;
// a failing cell is recorded and does not stop the others.
SweepResult run_sweep(const RunConfig& base, const std::vector<SweepCell>& grid);

}  // namespace mcgasr

#endif  // MCGASR_TRAINER_H_
