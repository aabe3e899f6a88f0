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

#include "mcgasr/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcgasr/ctc.h"
#include "mcgasr/gate_labels.h"

namespace mcgasr {

namespace fs = std::filesystem;

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_pct(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", 100.0 * v);
  return buf;
}

// Binary validity mask (B, T') from per-utterance lengths.
template <typename T>
Tensor<T> length_mask(Index b, Index t, const std::vector<Index>& lengths) {
  std::vector<T> m(static_cast<size_t>(b * t), T(0));
  for (Index bi = 0; bi < b; ++bi) {
    const Index len = lengths[static_cast<size_t>(bi)];
    for (Index ti = 0; ti < std::min(len, t); ++ti) {
      m[static_cast<size_t>(bi * t + ti)] = T(1);
    }
  }
  return Tensor<T>::from_data({b, t}, std::move(m));
}

std::vector<std::vector<Index>> to_index_tokens(const std::vector<std::vector<int>>& tokens) {
  std::vector<std::vector<Index>> out(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    out[i].assign(tokens[i].begin(), tokens[i].end());
  }
  return out;
}

void require_meta(const Checkpoint& ck, const std::string& key) {
  if (!ck.has_meta(key)) {
    throw ConfigError(str_cat("checkpoint is missing metadata key '", key, "'"));
  }
}

double meta_or_throw(const Checkpoint& ck, const std::string& key) {
  require_meta(ck, key);
  return ck.meta(key);
}

}  // namespace

// ---------------------------------------------------------------------------
// JointModel
// ---------------------------------------------------------------------------

template <typename T>
JointModel<T> JointModel<T>::init(const RunConfig& cfg, Index vocab) {
  if (vocab < 1) throw ConfigError("joint model: vocabulary must have at least one token");
  JointModel<T> m;
  m.mcg_cfg = cfg.mcg();
  m.asr_cfg = cfg.asr(vocab);
  m.epsilons = cfg.epsilons;
  m.stft = cfg.stft;
  m.fbank = cfg.fbank;
  m.mcg_cfg.validate();
  m.asr_cfg.validate();
  Rng init_rng(Rng(cfg.seed).derive_seed("init"));
  m.mcg.emplace(m.mcg_cfg, init_rng, m.params);
  m.asr.emplace(m.asr_cfg, init_rng, m.params);
  return m;
}

template <typename T>
void JointModel<T>::write_structure_meta(Checkpoint& ck) const {
  ck.put_meta("mcg.q", static_cast<double>(mcg_cfg.q));
  ck.put_meta("mcg.num_gates", static_cast<double>(mcg_cfg.num_gates));
  ck.put_meta("mcg.head_channels", static_cast<double>(mcg_cfg.head_channels));
  ck.put_meta("mcg.lstm_units", static_cast<double>(mcg_cfg.lstm_units));
  ck.put_meta("mcg.levels", static_cast<double>(mcg_cfg.encoder_channels.size()));
  for (size_t i = 0; i < mcg_cfg.encoder_channels.size(); ++i) {
    ck.put_meta(str_cat("mcg.ch.", i), static_cast<double>(mcg_cfg.encoder_channels[i]));
    ck.put_meta(str_cat("mcg.stride.", i), static_cast<double>(mcg_cfg.freq_strides[i]));
  }
  ck.put_meta("asr.blocks", static_cast<double>(asr_cfg.num_blocks));
  ck.put_meta("asr.d_model", static_cast<double>(asr_cfg.d_model));
  ck.put_meta("asr.ffn", static_cast<double>(asr_cfg.ffn_dim));
  ck.put_meta("asr.heads", static_cast<double>(asr_cfg.heads));
  ck.put_meta("asr.kernel", static_cast<double>(asr_cfg.conv_kernel));
  ck.put_meta("asr.vocab", static_cast<double>(asr_cfg.vocab));
  ck.put_meta("asr.q", static_cast<double>(asr_cfg.q));
  ck.put_meta("asr.dropout", asr_cfg.dropout);
  ck.put_meta("eps.count", static_cast<double>(epsilons.size()));
  for (size_t i = 0; i < epsilons.size(); ++i) {
    ck.put_meta(str_cat("eps.", i), epsilons[i]);
  }
  ck.put_meta("feat.win_ms", stft.win_ms);
  ck.put_meta("feat.hop_ms", stft.hop_ms);
  ck.put_meta("feat.n_fft", static_cast<double>(stft.n_fft));
  ck.put_meta("feat.q", static_cast<double>(fbank.q));
  ck.put_meta("feat.f_min", fbank.f_min);
  ck.put_meta("feat.f_max", fbank.f_max);
  ck.put_meta("feat.scale", fbank.scale == FilterbankScale::kMel ? 0.0 : 1.0);
  ck.put_meta("feat.floor_eps", fbank.floor_eps);
}

template <typename T>
JointModel<T> JointModel<T>::from_checkpoint(const Checkpoint& ck) {
  JointModel<T> m;
  m.mcg_cfg.q = static_cast<Index>(meta_or_throw(ck, "mcg.q"));
  m.mcg_cfg.num_gates = static_cast<Index>(meta_or_throw(ck, "mcg.num_gates"));
  m.mcg_cfg.head_channels = static_cast<Index>(meta_or_throw(ck, "mcg.head_channels"));
  m.mcg_cfg.lstm_units = static_cast<Index>(meta_or_throw(ck, "mcg.lstm_units"));
  const Index levels = static_cast<Index>(meta_or_throw(ck, "mcg.levels"));
  m.mcg_cfg.encoder_channels.clear();
  m.mcg_cfg.freq_strides.clear();
  for (Index i = 0; i < levels; ++i) {
    m.mcg_cfg.encoder_channels.push_back(static_cast<Index>(meta_or_throw(ck, str_cat("mcg.ch.", i))));
    m.mcg_cfg.freq_strides.push_back(static_cast<Index>(meta_or_throw(ck, str_cat("mcg.stride.", i))));
  }
  m.asr_cfg.num_blocks = static_cast<Index>(meta_or_throw(ck, "asr.blocks"));
  m.asr_cfg.d_model = static_cast<Index>(meta_or_throw(ck, "asr.d_model"));
  m.asr_cfg.ffn_dim = static_cast<Index>(meta_or_throw(ck, "asr.ffn"));
  m.asr_cfg.heads = static_cast<Index>(meta_or_throw(ck, "asr.heads"));
  m.asr_cfg.conv_kernel = static_cast<Index>(meta_or_throw(ck, "asr.kernel"));
  m.asr_cfg.vocab = static_cast<Index>(meta_or_throw(ck, "asr.vocab"));
  m.asr_cfg.q = static_cast<Index>(meta_or_throw(ck, "asr.q"));
  m.asr_cfg.dropout = meta_or_throw(ck, "asr.dropout");
  const Index n_eps = static_cast<Index>(meta_or_throw(ck, "eps.count"));
  for (Index i = 0; i < n_eps; ++i) {
    m.epsilons.push_back(meta_or_throw(ck, str_cat("eps.", i)));
  }
  m.stft.win_ms = meta_or_throw(ck, "feat.win_ms");
  m.stft.hop_ms = meta_or_throw(ck, "feat.hop_ms");
  m.stft.n_fft = static_cast<int>(meta_or_throw(ck, "feat.n_fft"));
  m.fbank.q = static_cast<Index>(meta_or_throw(ck, "feat.q"));
  m.fbank.f_min = meta_or_throw(ck, "feat.f_min");
  m.fbank.f_max = meta_or_throw(ck, "feat.f_max");
  m.fbank.scale =
      meta_or_throw(ck, "feat.scale") == 0.0 ? FilterbankScale::kMel : FilterbankScale::kBark;
  m.fbank.floor_eps = meta_or_throw(ck, "feat.floor_eps");

  m.mcg_cfg.validate();
  m.asr_cfg.validate();
  Rng scratch(0);
  m.mcg.emplace(m.mcg_cfg, scratch, m.params);
  m.asr.emplace(m.asr_cfg, scratch, m.params);
  m.params.load_from(ck, "model/");
  return m;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

template <typename T>
Trainer<T>::Trainer(const RunConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.train_manifest.empty() || cfg_.dev_manifest.empty()) {
    throw ConfigError("trainer: train and dev manifests must be set (is data.corpus_dir missing?)");
  }
  if (!fs::exists(cfg_.stats_path)) {
    throw ConfigError(str_cat("trainer: stats file ", cfg_.stats_path,
                              " not found; run the stats subcommand first"));
  }

  const auto train_records = read_manifest(cfg_.train_manifest);
  const auto dev_records = read_manifest(cfg_.dev_manifest);
  Index vocab = std::max(max_token_id(train_records), max_token_id(dev_records));
  if (!cfg_.test_manifest.empty() && fs::exists(cfg_.test_manifest)) {
    vocab = std::max<Index>(vocab, max_token_id(read_manifest(cfg_.test_manifest)));
  }
  if (vocab < 1) throw ConfigError("trainer: no tokens found in the manifests");

  const CorpusStats stats = read_stats(cfg_.stats_path);
  if (stats.q != cfg_.fbank.q) {
    throw ConfigError(str_cat("trainer: stats file has ", stats.q, " bands but feat.q is ",
                              cfg_.fbank.q, "; regenerate the stats"));
  }
  const ThresholdSet thresholds = make_thresholds(stats, cfg_.epsilons);

  std::vector<Waveform> noises;
  for (const std::string& path : find_noise_files(cfg_.noise_dir)) {
    noises.push_back(read_wav(path));
  }

  typename Batcher<T>::Config bc;
  bc.batch_size = cfg_.batch_size;
  bc.max_frames = cfg_.max_frames;
  bc.snr_lo = cfg_.snr_lo;
  bc.snr_hi = cfg_.snr_hi;
  bc.seed = cfg_.seed;
  bc.redraw_noise_each_epoch = cfg_.redraw_noise;
  bc.stft = cfg_.stft;
  bc.fbank = cfg_.fbank;
  train_batcher_.emplace(train_records, noises, thresholds, bc);

  // dev mixtures stay fixed so validation losses compare across epochs
  typename Batcher<T>::Config dc = bc;
  dc.seed = Rng(cfg_.seed).derive_seed("dev.batcher");
  dc.redraw_noise_each_epoch = false;
  dev_batcher_.emplace(dev_records, noises, thresholds, dc);

  model_ = JointModel<T>::init(cfg_, vocab);

  typename Adam<T>::Config ac;
  ac.lr = cfg_.lr;
  opt_ = Adam<T>(ac);
  for (const auto& [name, tensor] : model_.params.items()) {
    if (tensor.requires_grad()) opt_.add_param(name, tensor);
  }

  PlateauSchedule::Config sc;
  sc.initial_lr = cfg_.lr;
  sc.decay_factor = cfg_.decay_factor;
  sc.plateau_patience = cfg_.plateau_patience;
  sc.stop_patience = cfg_.stop_patience;
  sched_ = PlateauSchedule(sc);
}

template <typename T>
JointLossBreakdown<T> Trainer<T>::forward_losses(const Batch<T>& batch, BnMode noisy_mode,
                                                 Rng* dropout_rng) const {
  const Index q = batch.noisy.shape()[2];

  const McgOutput<T> mcg_out = model_.mcg->forward(batch.noisy, noisy_mode);
  const AsrOutput<T> asr_out =
      model_.asr->forward(mcg_out.fused, batch.lengths, noisy_mode, dropout_rng);

  // the clean branch records no graph: its outputs are constant targets
  std::vector<Tensor<T>> clean_gated;
  Tensor<T> clean_encoded;
  {
    NoGradGuard ng;
    const BnMode clean_mode = noisy_mode == BnMode::kEval ? BnMode::kEval : BnMode::kTrainNoUpdate;
    const McgOutput<T> clean_mcg = model_.mcg->forward(batch.clean, clean_mode);
    clean_gated = clean_mcg.gated;
    clean_encoded =
        model_.asr->forward(clean_mcg.fused, batch.lengths, clean_mode, nullptr).encoded;
  }

  const Tensor<T> feat_mask = expand_mask(batch.frame_mask, q);
  const Tensor<T> l_g = gate_loss(mcg_out.gates, batch.labels, feat_mask);
  const Tensor<T> l_r = filtered_consistency_loss(mcg_out.gated, clean_gated, feat_mask);

  const Index t_sub = asr_out.encoded.shape()[1];
  const Tensor<T> sub_mask = expand_mask(
      length_mask<T>(asr_out.encoded.shape()[0], t_sub, asr_out.out_lengths),
      asr_out.encoded.shape()[2]);
  const Tensor<T> l_o = encoder_consistency_loss(asr_out.encoded, clean_encoded, sub_mask);

  const Tensor<T> l_ctc =
      ctc_loss_batch(asr_out.logits, asr_out.out_lengths, to_index_tokens(batch.tokens));

  JointLossWeights<T> w;
  w.gate = static_cast<T>(cfg_.w_gate);
  w.filtered = static_cast<T>(cfg_.w_filtered);
  w.encoder = static_cast<T>(cfg_.w_encoder);
  w.ctc = static_cast<T>(cfg_.w_ctc);
  return total_loss(l_g, l_r, l_o, l_ctc, w);
}

template <typename T>
TrainStepLog Trainer<T>::train_step(Index epoch, Index batch_index) {
  const Batch<T> batch = train_batcher_->batch(epoch, batch_index);
  Rng dropout_rng(Rng(cfg_.seed).derive_seed(str_cat("dropout.", epoch, ".", batch_index)));

  opt_.zero_grad();
  JointLossBreakdown<T> losses = forward_losses(batch, BnMode::kTrain, &dropout_rng);
  losses.total.backward();

  const double max_norm =
      cfg_.grad_clip > 0 ? cfg_.grad_clip : std::numeric_limits<double>::infinity();
  const double grad_norm = clip_global_grad_norm(opt_, max_norm);
  opt_.step();
  ++global_step_;

  TrainStepLog log;
  log.epoch = epoch;
  log.batch_index = batch_index;
  log.global_step = global_step_;
  log.l_g = static_cast<double>(losses.l_g.item());
  log.l_r = static_cast<double>(losses.l_r.item());
  log.l_o = static_cast<double>(losses.l_o.item());
  log.l_ctc = static_cast<double>(losses.l_ctc.item());
  log.total = static_cast<double>(losses.total.item());
  log.lr = opt_.lr();
  log.grad_norm = grad_norm;
  return log;
}

template <typename T>
void Trainer<T>::validation_losses(double* total, double* ctc) const {
  NoGradGuard ng;
  double total_sum = 0, ctc_sum = 0;
  Index utts = 0;
  for (Index k = 0; k < dev_batcher_->num_batches(); ++k) {
    const Batch<T> batch = dev_batcher_->batch(0, k);
    const JointLossBreakdown<T> losses = forward_losses(batch, BnMode::kEval, nullptr);
    const double bs = static_cast<double>(batch.size());
    total_sum += static_cast<double>(losses.total.item()) * bs;
    ctc_sum += static_cast<double>(losses.l_ctc.item()) * bs;
    utts += batch.size();
  }
  if (total != nullptr) *total = total_sum / static_cast<double>(utts);
  if (ctc != nullptr) *ctc = ctc_sum / static_cast<double>(utts);
}

template <typename T>
void Trainer<T>::save_checkpoint(const std::string& path, Index next_epoch) const {
  Checkpoint ck;
  model_.params.save_into(ck, "model/");
  for (const auto& slot : opt_.slots()) {
    ck.put_tensor(str_cat("opt/", slot.name, ".m"), slot.param.shape(), slot.m);
    ck.put_tensor(str_cat("opt/", slot.name, ".v"), slot.param.shape(), slot.v);
  }
  model_.write_structure_meta(ck);
  ck.put_meta("train.next_epoch", static_cast<double>(next_epoch));
  ck.put_meta("train.global_step", static_cast<double>(global_step_));
  ck.put_meta("train.adam_steps", static_cast<double>(opt_.step_count()));
  ck.put_meta("train.lr", opt_.lr());
  ck.put_meta("train.best_val", sched_.best_loss());
  ck.put_meta("train.since_improvement", static_cast<double>(sched_.epochs_since_improvement()));
  ck.save(path);
}

template <typename T>
void Trainer<T>::restore(const std::string& checkpoint_path) {
  const Checkpoint ck = Checkpoint::load(checkpoint_path);
  const Index vocab = static_cast<Index>(meta_or_throw(ck, "asr.vocab"));
  if (vocab != model_.asr_cfg.vocab) {
    throw ConfigError(str_cat("checkpoint vocabulary ", vocab, " does not match the corpus (",
                              model_.asr_cfg.vocab, ")"));
  }
  model_.params.load_from(ck, "model/");
  for (auto& slot : opt_.slots()) {
    slot.m = ck.get_tensor<T>(str_cat("opt/", slot.name, ".m"), slot.param.shape());
    slot.v = ck.get_tensor<T>(str_cat("opt/", slot.name, ".v"), slot.param.shape());
  }
  opt_.set_step_count(static_cast<std::int64_t>(meta_or_throw(ck, "train.adam_steps")));
  opt_.set_lr(meta_or_throw(ck, "train.lr"));
  sched_.restore(meta_or_throw(ck, "train.lr"), meta_or_throw(ck, "train.best_val"),
                 static_cast<int>(meta_or_throw(ck, "train.since_improvement")));
  start_epoch_ = static_cast<Index>(meta_or_throw(ck, "train.next_epoch"));
  global_step_ = static_cast<std::int64_t>(meta_or_throw(ck, "train.global_step"));
}

template <typename T>
TrainResult Trainer<T>::run() {
  std::error_code ec;
  fs::create_directories(cfg_.out_dir, ec);
  if (ec) throw IoError(str_cat("cannot create output directory ", cfg_.out_dir));

  {
    std::ofstream cfg_out(fs::path(cfg_.out_dir) / "config.resolved");
    cfg_out << run_config_to_text(cfg_);
  }

  TrainResult res;
  res.best_val = sched_.best_loss();
  res.log_path = (fs::path(cfg_.out_dir) / "train.log").string();
  res.best_checkpoint = (fs::path(cfg_.out_dir) / "best.ckpt").string();
  res.last_checkpoint = (fs::path(cfg_.out_dir) / "last.ckpt").string();

  std::ofstream log(res.log_path, start_epoch_ == 0 ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError(str_cat("cannot open training log ", res.log_path));
  if (start_epoch_ == 0) {
    log << "weights gate " << fmt_g(cfg_.w_gate) << " filtered " << fmt_g(cfg_.w_filtered)
        << " encoder " << fmt_g(cfg_.w_encoder) << " ctc " << fmt_g(cfg_.w_ctc) << "\n";
    // a pre-training checkpoint so a halt always has a last-good state
    save_checkpoint(res.last_checkpoint, 0);
  }

  for (Index epoch = start_epoch_; epoch < cfg_.max_epochs; ++epoch) {
    double epoch_total = 0;
    const Index steps = train_batcher_->num_batches();
    for (Index k = 0; k < steps; ++k) {
      const TrainStepLog s = train_step(epoch, k);
      epoch_total += s.total;
      log << "step " << s.global_step << " epoch " << s.epoch << " batch " << s.batch_index
          << " l_g " << fmt_g(s.l_g) << " l_r " << fmt_g(s.l_r) << " l_o " << fmt_g(s.l_o)
          << " l_ctc " << fmt_g(s.l_ctc) << " total " << fmt_g(s.total) << " lr "
          << fmt_g(s.lr) << " grad_norm " << fmt_g(s.grad_norm) << "\n";
      ++res.steps;
    }
    epoch_total /= static_cast<double>(steps);

    double val_total = 0, val_ctc = 0;
    validation_losses(&val_total, &val_ctc);
    const double metric = cfg_.plateau_on_ctc ? val_ctc : val_total;
    const PlateauSchedule::Update upd = sched_.observe(metric);
    opt_.set_lr(upd.lr);

    log << "epoch " << epoch << " steps " << steps << " train_total " << fmt_g(epoch_total)
        << " val_total " << fmt_g(val_total) << " val_ctc " << fmt_g(val_ctc)
        << " plateau_metric " << fmt_g(metric) << " lr_next " << fmt_g(upd.lr) << " improved "
        << (upd.improved ? 1 : 0) << " stop " << (upd.stop ? 1 : 0) << "\n";
    log.flush();

    res.epoch_train_loss.push_back(epoch_total);
    res.epoch_val_metric.push_back(metric);
    ++res.epochs_run;

    if (upd.improved) {
      res.best_val = metric;
      save_checkpoint(res.best_checkpoint, epoch + 1);
    }
    save_checkpoint(res.last_checkpoint, epoch + 1);

    if (upd.stop) {
      res.plateau_stopped = true;
      break;
    }
  }

  if (!fs::exists(res.best_checkpoint)) {
    // no epoch improved on the initial infinity, which cannot happen with a
    // finite metric, but keep the contract: best always exists after run()
    save_checkpoint(res.best_checkpoint, start_epoch_);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

template <typename T>
EvalReport evaluate_model(const JointModel<T>& model, const std::vector<UtteranceRecord>& records,
                          const std::vector<Waveform>& noises, const EvalOptions& opts) {
  if (records.empty()) throw ConfigError("evaluate: manifest has no utterances");
  if (max_token_id(records) > model.vocab()) {
    throw ConfigError(str_cat("evaluate: manifest token ids reach ", max_token_id(records),
                              " but the checkpoint vocabulary is ", model.vocab()));
  }
  if (!opts.snrs.empty() && noises.empty()) {
    throw ConfigError("evaluate: noisy conditions requested but no noise files given");
  }

  EvalReport report;
  ConditionReport clean_cond;
  clean_cond.name = "clean";
  clean_cond.is_clean = true;
  report.conditions.push_back(clean_cond);
  for (double snr : opts.snrs) {
    ConditionReport c;
    c.name = str_cat("snr", snr, "dB");
    c.snr_db = snr;
    report.conditions.push_back(c);
  }

  const Rng root(opts.seed);
  NoGradGuard ng;
  for (const UtteranceRecord& rec : records) {
    const Waveform clean = read_wav(rec.wav_path);
    std::vector<Index> ref(rec.tokens.begin(), rec.tokens.end());

    for (ConditionReport& cond : report.conditions) {
      Waveform wav = clean;
      if (!cond.is_clean) {
        MixSpec spec;
        spec.snr_db = cond.snr_db;
        spec.seed = root.derive_seed(str_cat("eval.", rec.id, ".", cond.name));
        Rng mr(spec.seed);
        spec.noise_id = static_cast<Index>(mr.uniform_index(noises.size()));
        const Waveform& noise = noises[static_cast<size_t>(spec.noise_id)];
        spec.crop_offset = static_cast<Index>(mr.uniform_index(noise.samples.size()));
        wav = mix_at_snr(clean, noise, spec).mixture;
      }

      LogFbank feat;
      try {
        feat = wav_to_log_fbank(wav, model.stft, model.fbank);
      } catch (const ConfigError&) {
        ++cond.skipped;  // shorter than one analysis window
        continue;
      }
      if (feat.t < ConformerConfig::kMinFrames) {
        ++cond.skipped;
        continue;
      }

      std::vector<T> v(static_cast<size_t>(feat.t * feat.q));
      for (Index i = 0; i < feat.t * feat.q; ++i) {
        v[static_cast<size_t>(i)] = static_cast<T>(feat.values[static_cast<size_t>(i)]);
      }
      const auto x = Tensor<T>::from_data({1, feat.t, feat.q}, std::move(v));
      const McgOutput<T> mcg_out = model.mcg->forward(x, BnMode::kEval);
      const AsrOutput<T> asr_out =
          model.asr->forward(mcg_out.fused, {feat.t}, BnMode::kEval, nullptr);

      const auto logits_2d = reshape(asr_out.logits, {asr_out.logits.shape()[1],
                                                      asr_out.logits.shape()[2]});
      const std::vector<Index> hyp = greedy_ctc_decode(logits_2d);
      const AlignmentCounts counts = wer_align(ref, hyp);
      cond.wer.add(counts);
      if (opts.per_utterance) {
        report.rows.push_back({cond.name, rec.id, counts, hyp});
      }
    }
  }
  return report;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "condition        utts   S      D      I      WER%    meanS   meanD   meanI   meanWER%  skipped\n";
  for (const ConditionReport& c : conditions) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-16s %-6lld %-6lld %-6lld %-6lld %-7s %-7.3f %-7.3f %-7.3f %-9s %lld\n",
                  c.name.c_str(), static_cast<long long>(c.wer.utterances),
                  static_cast<long long>(c.wer.totals.sub),
                  static_cast<long long>(c.wer.totals.del),
                  static_cast<long long>(c.wer.totals.ins), fmt_pct(c.wer.corpus_wer()).c_str(),
                  c.wer.mean_sub, c.wer.mean_del, c.wer.mean_ins,
                  fmt_pct(c.wer.mean_wer).c_str(), static_cast<long long>(c.skipped));
    os << line;
  }
  return os.str();
}

std::string EvalReport::rows_tsv() const {
  std::ostringstream os;
  os << "condition\tid\tref_len\tS\tD\tI\twer\thyp\n";
  for (const PerUtteranceRow& r : rows) {
    os << r.condition << "\t" << r.id << "\t" << r.counts.ref_len << "\t" << r.counts.sub << "\t"
       << r.counts.del << "\t" << r.counts.ins << "\t" << fmt_g(r.counts.wer()) << "\t";
    for (size_t i = 0; i < r.hyp.size(); ++i) {
      if (i) os << " ";
      os << r.hyp[i];
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

std::vector<SweepCell> parse_sweep_grid(const std::string& text) {
  std::vector<SweepCell> grid;
  std::istringstream cells(text);
  std::string cell;
  while (std::getline(cells, cell, ';')) {
    if (cell.empty()) continue;
    const auto colon = cell.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(str_cat("sweep cell '", cell, "' is not n:eps,eps"));
    }
    SweepCell sc;
    try {
      sc.n = std::stoll(cell.substr(0, colon));
    } catch (const std::exception&) {
      throw ConfigError(str_cat("sweep cell '", cell, "' has a bad gate count"));
    }
    std::istringstream eps(cell.substr(colon + 1));
    std::string item;
    while (std::getline(eps, item, ',')) {
      try {
        sc.epsilons.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError(str_cat("sweep cell '", cell, "' has a bad offset '", item, "'"));
      }
    }
    if (sc.n != static_cast<Index>(sc.epsilons.size())) {
      throw ConfigError(str_cat("sweep cell '", cell, "': gate count ", sc.n, " but ",
                                sc.epsilons.size(), " offsets"));
    }
    grid.push_back(std::move(sc));
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  return grid;
}

std::vector<SweepCell> default_sweep_grid() {
  return {
      {1, {0.0}},
      {2, {-1.0, 1.0}},
      {3, {-1.0, 1.0, 2.0}},
      {4, {-2.0, -1.0, 1.0, 2.0}},
  };
}

SweepResult run_sweep(const RunConfig& base, const std::vector<SweepCell>& grid) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  SweepResult result;
  result.condition_names.push_back("clean");
  for (double snr : base.eval_snrs) result.condition_names.push_back(str_cat("snr", snr, "dB"));

  for (size_t i = 0; i < grid.size(); ++i) {
    SweepCellResult cell;
    cell.cell = grid[i];
    try {
      RunConfig cfg = base;
      cfg.epsilons = grid[i].epsilons;
      cfg.out_dir = (fs::path(base.out_dir) / str_cat("cell_", i, "_n", grid[i].n)).string();
      cfg.validate();

      Trainer<float> trainer(cfg);
      const TrainResult tr = trainer.run();
      cell.checkpoint = tr.best_checkpoint;

      const Checkpoint ck = Checkpoint::load(tr.best_checkpoint);
      const JointModel<float> model = JointModel<float>::from_checkpoint(ck);
      const auto records = read_manifest(cfg.test_manifest);
      std::vector<Waveform> noises;
      for (const std::string& path : find_noise_files(cfg.noise_dir)) {
        noises.push_back(read_wav(path));
      }
      EvalOptions opts;
      opts.snrs = cfg.eval_snrs;
      opts.seed = Rng(cfg.seed).derive_seed("eval");
      cell.report = evaluate_model(model, records, noises, opts);
      cell.ok = true;
    } catch (const Error& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

std::string SweepResult::to_text() const {
  std::ostringstream os;
  os << "n    offsets              ";
  for (const std::string& name : condition_names) {
    char col[32];
    std::snprintf(col, sizeof(col), "%-14s", (name + " WER%").c_str());
    os << col;
  }
  os << "\n";
  for (const SweepCellResult& cell : cells) {
    std::ostringstream eps;
    for (size_t i = 0; i < cell.cell.epsilons.size(); ++i) {
      if (i) eps << ",";
      eps << cell.cell.epsilons[i];
    }
    char head[64];
    std::snprintf(head, sizeof(head), "%-4lld %-20s", static_cast<long long>(cell.cell.n),
                  eps.str().c_str());
    os << head;
    if (!cell.ok) {
      os << "FAILED: " << cell.error;
    } else {
      for (const std::string& name : condition_names) {
        std::string value = "-";
        for (const ConditionReport& c : cell.report.conditions) {
          if (c.name == name) value = fmt_pct(c.wer.corpus_wer());
        }
        char col[32];
        std::snprintf(col, sizeof(col), "%-14s", value.c_str());
        os << col;
      }
    }
    os << "\n";
  }
  return os.str();
}

template struct JointModel<float>;
template struct JointModel<double>;
template class Trainer<float>;
template class Trainer<double>;
template EvalReport evaluate_model<float>(const JointModel<float>&,
                                          const std::vector<UtteranceRecord>&,
                                          const std::vector<Waveform>&, const EvalOptions&);
template EvalReport evaluate_model<double>(const JointModel<double>&,
                                           const std::vector<UtteranceRecord>&,
                                           const std::vector<Waveform>&, const EvalOptions&);

}  // namespace mcgasr
