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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mcgasr/ctc.h"
#include "mcgasr/trainer.h"

namespace mcgasr {
namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("mcgasr_trainer_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(bool(is));
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Synthesizes a corpus and writes its stats cache, returning a ready
// RunConfig rooted at a fresh temp directory.
RunConfig small_run_config(const std::string& tag, std::uint64_t seed = 7) {
  const std::string dir = fresh_dir(tag);
  ToyCorpusConfig tc;
  tc.out_dir = dir;
  tc.vocab = 3;
  tc.num_train = 6;
  tc.num_dev = 2;
  tc.num_test = 2;
  tc.min_tokens = 2;
  tc.max_tokens = 3;
  tc.token_seconds = 0.09;
  tc.gap_seconds = 0.025;
  tc.edge_seconds = 0.04;
  tc.num_white_noise = 1;
  tc.num_babble_noise = 1;
  tc.noise_seconds = 1.5;
  tc.seed = seed;
  synth_toy_corpus(tc);

  RunConfig cfg = RunConfig::desk();
  cfg.corpus_dir = dir;
  cfg.out_dir = dir + "/run";
  cfg.epsilons = {-1.0, 1.0};
  cfg.batch_size = 3;
  cfg.max_epochs = 2;
  cfg.seed = seed;
  cfg.finalize();

  std::vector<LogFbank> feats;
  for (const UtteranceRecord& rec : read_manifest(cfg.train_manifest)) {
    feats.push_back(wav_to_log_fbank(read_wav(rec.wav_path), cfg.stft, cfg.fbank));
  }
  write_stats(cfg.stats_path, corpus_stats(feats), cfg.epsilons);
  return cfg;
}

template <typename T>
bool same_values(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && a.values() == b.values();
}

// Mirrors the trainer's encoder-mask construction for hand-rolled loss
// compositions in the stop-gradient checks.
template <typename T>
Tensor<T> sub_length_mask(const AsrOutput<T>& out) {
  const Index b = out.encoded.shape()[0];
  const Index t = out.encoded.shape()[1];
  std::vector<T> m(static_cast<size_t>(b * t), T(0));
  for (Index bi = 0; bi < b; ++bi) {
    for (Index ti = 0; ti < std::min(out.out_lengths[static_cast<size_t>(bi)], t); ++ti) {
      m[static_cast<size_t>(bi * t + ti)] = T(1);
    }
  }
  return expand_mask(Tensor<T>::from_data({b, t}, std::move(m)), out.encoded.shape()[2]);
}

TEST_CASE("run config files, overrides, and bad keys") {
  const std::string dir = fresh_dir("config");
  const std::string path = dir + "/run.conf";
  {
    std::ofstream os(path);
    os << "# comment line\n";
    os << "preset = desk\n";
    os << "model.epsilons = -2, 0.5, 3\n";
    os << "train.lr = 0.001\n";
    os << "train.batch_size = 2\n";
    os << "loss.ctc = 2.5\n";
    os << "out.dir = " << dir << "/out # trailing comment\n";
  }

  SUBCASE("file keys land on the config") {
    const RunConfig cfg = load_run_config(path, {});
    CHECK(cfg.preset == "desk");
    CHECK(cfg.epsilons == std::vector<double>{-2.0, 0.5, 3.0});
    CHECK(cfg.num_gates() == 3);
    CHECK(cfg.lr == 0.001);
    CHECK(cfg.batch_size == 2);
    CHECK(cfg.w_ctc == 2.5);
    CHECK(cfg.out_dir == dir + "/out");
  }

  SUBCASE("command-line overrides win over the file") {
    const RunConfig cfg = load_run_config(path, {"train.lr=0.002", "model.epsilons=0"});
    CHECK(cfg.lr == 0.002);
    CHECK(cfg.epsilons == std::vector<double>{0.0});
  }

  SUBCASE("unknown keys and malformed values are rejected") {
    CHECK_THROWS_WITH_AS(load_run_config(path, {"bogus.key=1"}),
                         doctest::Contains("unknown config key"), ConfigError);
    CHECK_THROWS_AS(load_run_config(path, {"train.lr=abc"}), ConfigError);
    CHECK_THROWS_AS(load_run_config(path, {"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(load_run_config(path, {"preset=bogus"}), ConfigError);
  }

  SUBCASE("descending offsets fail validation") {
    CHECK_THROWS_WITH_AS(load_run_config(path, {"model.epsilons=1,-1"}),
                         doctest::Contains("ascending"), ConfigError);
  }

  SUBCASE("resolved text round-trips") {
    const RunConfig cfg = load_run_config(path, {"train.lr=0.002"});
    const std::string dump = dir + "/resolved.conf";
    {
      std::ofstream os(dump);
      os << run_config_to_text(cfg);
    }
    const RunConfig again = load_run_config(dump, {});
    CHECK(again.preset == cfg.preset);
    CHECK(again.epsilons == cfg.epsilons);
    CHECK(again.lr == cfg.lr);
    CHECK(again.batch_size == cfg.batch_size);
    CHECK(again.w_ctc == cfg.w_ctc);
    CHECK(again.out_dir == cfg.out_dir);
    CHECK(again.stft.win_ms == cfg.stft.win_ms);
    CHECK(again.fbank.q == cfg.fbank.q);
  }

  SUBCASE("output root env var prefixes relative out dirs") {
    setenv("MCGASR_OUT_ROOT", dir.c_str(), 1);
    RunConfig cfg = RunConfig::desk();
    cfg.out_dir = "nested/run";
    cfg.finalize();
    unsetenv("MCGASR_OUT_ROOT");
    CHECK(cfg.out_dir == (fs::path(dir) / "nested/run").string());

    RunConfig abs_cfg = RunConfig::desk();
    abs_cfg.out_dir = dir + "/already_abs";
    setenv("MCGASR_OUT_ROOT", "/somewhere/else", 1);
    abs_cfg.finalize();
    unsetenv("MCGASR_OUT_ROOT");
    CHECK(abs_cfg.out_dir == dir + "/already_abs");
  }
}

TEST_CASE("full preset carries the published geometry") {
  const RunConfig cfg = RunConfig::full();
  CHECK(cfg.fbank.q == 80);
  CHECK(cfg.epsilons == std::vector<double>{-1.0, 1.0, 2.0});
  CHECK(cfg.num_gates() == 3);
  CHECK(cfg.lr == 2e-4);

  const McgConfig mcg = cfg.mcg();
  CHECK(mcg.q == 80);
  CHECK(mcg.encoder_channels == std::vector<Index>{32, 48, 64, 80, 96});
  CHECK(mcg.freq_strides == std::vector<Index>{1, 1, 2, 2, 1});
  CHECK(mcg.lstm_units == 128);
  CHECK(mcg.flat_width() == 1920);
  CHECK(mcg.head_channels == 10);

  const ConformerConfig asr = cfg.asr(5);
  CHECK(asr.num_blocks == 12);
  CHECK(asr.d_model == 256);
  CHECK(asr.ffn_dim == 2048);
  CHECK(asr.heads == 4);
  CHECK(asr.conv_kernel == 15);
  CHECK(asr.q == 80);
  CHECK(asr.vocab == 5);
}

TEST_CASE("trainer runs, logs every component, and checkpoints") {
  RunConfig cfg = small_run_config("run");
  Trainer<float> trainer(cfg);
  const TrainResult res = trainer.run();

  CHECK(res.epochs_run == 2);
  CHECK(res.steps == 4);  // 6 utterances / batch 3, two epochs
  REQUIRE(res.epoch_train_loss.size() == 2);
  REQUIRE(res.epoch_val_metric.size() == 2);
  for (double v : res.epoch_train_loss) CHECK(std::isfinite(v));
  for (double v : res.epoch_val_metric) CHECK(std::isfinite(v));
  CHECK(std::isfinite(res.best_val));

  CHECK(fs::exists(res.best_checkpoint));
  CHECK(fs::exists(res.last_checkpoint));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "config.resolved"));

  const std::string log = read_text(res.log_path);
  for (const char* field : {"l_g ", "l_r ", "l_o ", "l_ctc ", "total ", "lr ", "grad_norm ",
                            "val_total ", "val_ctc ", "plateau_metric ", "improved ", "stop "}) {
    CAPTURE(field);
    CHECK(log.find(field) != std::string::npos);
  }
  CHECK(std::count(log.begin(), log.end(), '\n') >= 4 + 2);

  SUBCASE("logged validation metric is exactly what the schedule saw") {
    std::istringstream is(log);
    std::string line;
    std::vector<double> logged;
    while (std::getline(is, line)) {
      const auto pos = line.find("plateau_metric ");
      if (pos == std::string::npos) continue;
      std::istringstream ls(line.substr(pos + 15));
      double v = 0;
      ls >> v;
      logged.push_back(v);
    }
    REQUIRE(logged.size() == 2);
    CHECK(logged[0] == res.epoch_val_metric[0]);
    CHECK(logged[1] == res.epoch_val_metric[1]);
  }
}

TEST_CASE("same seed gives bitwise identical losses across trainers") {
  RunConfig cfg = small_run_config("det");
  Trainer<float> a(cfg);
  RunConfig cfg_b = cfg;
  cfg_b.out_dir = cfg.out_dir + "_b";
  Trainer<float> b(cfg_b);

  const Batch<float> ba = a.train_batcher().batch(0, 0);
  const Batch<float> bb = b.train_batcher().batch(0, 0);
  REQUIRE(ba.ids == bb.ids);
  REQUIRE(same_values(ba.noisy, bb.noisy));

  const auto la = a.forward_losses(ba, BnMode::kTrain, nullptr);
  const auto lb = b.forward_losses(bb, BnMode::kTrain, nullptr);
  CHECK(la.total.item() == lb.total.item());
  CHECK(la.l_g.item() == lb.l_g.item());
  CHECK(la.l_r.item() == lb.l_r.item());
  CHECK(la.l_o.item() == lb.l_o.item());
  CHECK(la.l_ctc.item() == lb.l_ctc.item());
}

TEST_CASE("zero weights on the auxiliary terms reduce to plain recognition training") {
  RunConfig cfg = small_run_config("ctconly");
  cfg.w_gate = 0.0;
  cfg.w_filtered = 0.0;
  cfg.w_encoder = 0.0;
  cfg.w_ctc = 1.0;
  Trainer<float> trainer(cfg);
  const Batch<float> batch = trainer.train_batcher().batch(0, 0);
  const auto losses = trainer.forward_losses(batch, BnMode::kTrain, nullptr);
  // the parts are still computed and reported, only their weights vanish
  CHECK(losses.l_g.item() > 0.0f);
  CHECK(losses.l_r.item() >= 0.0f);
  CHECK(losses.l_o.item() >= 0.0f);
  CHECK(losses.total.item() == losses.l_ctc.item());
}

TEST_CASE("clean branch is a constant: gradients match an explicit-constant rebuild") {
  RunConfig cfg = small_run_config("stopgrad");
  Trainer<double> trainer(cfg);
  JointModel<double>& m = trainer.model();
  const Batch<double> batch = trainer.train_batcher().batch(0, 0);
  const Index q = batch.noisy.shape()[2];
  const Tensor<double> feat_mask = expand_mask(batch.frame_mask, q);

  std::vector<std::vector<Index>> targets;
  for (const auto& t : batch.tokens) targets.emplace_back(t.begin(), t.end());

  JointLossWeights<double> w;

  auto noisy_losses = [&](const std::vector<Tensor<double>>& clean_gated,
                          const Tensor<double>& clean_encoded) {
    const McgOutput<double> mcg_out = m.mcg->forward(batch.noisy, BnMode::kTrain);
    const AsrOutput<double> asr_out =
        m.asr->forward(mcg_out.fused, batch.lengths, BnMode::kTrain, nullptr);
    const auto l_g = gate_loss(mcg_out.gates, batch.labels, feat_mask);
    const auto l_r = filtered_consistency_loss(mcg_out.gated, clean_gated, feat_mask);
    const auto l_o = encoder_consistency_loss(asr_out.encoded, clean_encoded,
                                              sub_length_mask(asr_out));
    const auto l_ctc = ctc_loss_batch(asr_out.logits, asr_out.out_lengths, targets);
    return total_loss(l_g, l_r, l_o, l_ctc, w);
  };

  auto clean_branch = [&]() {
    NoGradGuard ng;
    const McgOutput<double> c = m.mcg->forward(batch.clean, BnMode::kTrainNoUpdate);
    const AsrOutput<double> ca =
        m.asr->forward(c.fused, batch.lengths, BnMode::kTrainNoUpdate, nullptr);
    return std::make_pair(c.gated, ca.encoded);
  };

  auto grads_snapshot = [&]() {
    std::vector<std::vector<double>> grads;
    for (const auto& slot : trainer.optimizer().slots()) grads.push_back(slot.param.grad());
    return grads;
  };

  // reference: the trainer's composition, which runs the noisy branch first
  trainer.optimizer().zero_grad();
  trainer.forward_losses(batch, BnMode::kTrain, nullptr).total.backward();
  const auto grads_ref = grads_snapshot();

  SUBCASE("computing the clean branch before the noisy one changes nothing") {
    trainer.optimizer().zero_grad();
    auto [clean_gated, clean_encoded] = clean_branch();
    noisy_losses(clean_gated, clean_encoded).total.backward();
    const auto grads_swapped = grads_snapshot();
    REQUIRE(grads_swapped.size() == grads_ref.size());
    for (size_t i = 0; i < grads_ref.size(); ++i) {
      CHECK(grads_swapped[i] == grads_ref[i]);
    }
  }

  SUBCASE("constants holding the clean values give bitwise equal gradients") {
    auto [clean_gated, clean_encoded] = clean_branch();
    std::vector<Tensor<double>> const_gated;
    for (const auto& g : clean_gated) {
      const_gated.push_back(Tensor<double>::from_data(g.shape(), g.values()));
    }
    const auto const_encoded =
        Tensor<double>::from_data(clean_encoded.shape(), clean_encoded.values());

    trainer.optimizer().zero_grad();
    noisy_losses(const_gated, const_encoded).total.backward();
    const auto grads_const = grads_snapshot();

    REQUIRE(grads_const.size() == grads_ref.size());
    for (size_t i = 0; i < grads_ref.size(); ++i) {
      CHECK(grads_const[i] == grads_ref[i]);
    }
  }
}

TEST_CASE("resume reproduces the uninterrupted run bitwise") {
  RunConfig cfg = small_run_config("resume");
  cfg.max_epochs = 1;

  Trainer<float> a(cfg);
  const TrainResult first = a.run();
  REQUIRE(first.epochs_run == 1);
  const TrainStepLog next_a = a.train_step(1, 0);

  RunConfig cfg_b = cfg;
  cfg_b.out_dir = cfg.out_dir + "_b";
  Trainer<float> b(cfg_b);
  b.restore(first.last_checkpoint);
  CHECK(b.start_epoch() == 1);
  CHECK(b.global_step() == 2);
  const TrainStepLog next_b = b.train_step(1, 0);

  CHECK(next_b.l_g == next_a.l_g);
  CHECK(next_b.l_r == next_a.l_r);
  CHECK(next_b.l_o == next_a.l_o);
  CHECK(next_b.l_ctc == next_a.l_ctc);
  CHECK(next_b.total == next_a.total);
  CHECK(next_b.grad_norm == next_a.grad_norm);
  CHECK(next_b.global_step == next_a.global_step);

  const auto& items_a = a.model().params.items();
  const auto& items_b = b.model().params.items();
  REQUIRE(items_a.size() == items_b.size());
  for (size_t i = 0; i < items_a.size(); ++i) {
    CAPTURE(items_a[i].first);
    CHECK(items_a[i].first == items_b[i].first);
    CHECK(items_a[i].second.values() == items_b[i].second.values());
  }
  const auto& slots_a = a.optimizer().slots();
  const auto& slots_b = b.optimizer().slots();
  REQUIRE(slots_a.size() == slots_b.size());
  for (size_t i = 0; i < slots_a.size(); ++i) {
    CHECK(slots_a[i].m == slots_b[i].m);
    CHECK(slots_a[i].v == slots_b[i].v);
  }
  CHECK(a.optimizer().step_count() == b.optimizer().step_count());
}

TEST_CASE("checkpoints alone rebuild the model") {
  RunConfig cfg = small_run_config("rebuild");
  cfg.max_epochs = 1;
  Trainer<float> trainer(cfg);
  const TrainResult res = trainer.run();

  const JointModel<float> loaded = JointModel<float>::from_checkpoint(
      Checkpoint::load(res.last_checkpoint));
  CHECK(loaded.mcg_cfg.q == trainer.model().mcg_cfg.q);
  CHECK(loaded.mcg_cfg.encoder_channels == trainer.model().mcg_cfg.encoder_channels);
  CHECK(loaded.asr_cfg.vocab == trainer.model().asr_cfg.vocab);
  CHECK(loaded.asr_cfg.d_model == trainer.model().asr_cfg.d_model);
  CHECK(loaded.epsilons == cfg.epsilons);
  CHECK(loaded.fbank.q == cfg.fbank.q);
  CHECK(loaded.stft.win_ms == cfg.stft.win_ms);

  NoGradGuard ng;
  const Batch<float> batch = trainer.dev_batcher().batch(0, 0);
  const McgOutput<float> ma = trainer.model().mcg->forward(batch.noisy, BnMode::kEval);
  const McgOutput<float> mb = loaded.mcg->forward(batch.noisy, BnMode::kEval);
  CHECK(same_values(ma.fused, mb.fused));
  const AsrOutput<float> aa =
      trainer.model().asr->forward(ma.fused, batch.lengths, BnMode::kEval, nullptr);
  const AsrOutput<float> ab = loaded.asr->forward(mb.fused, batch.lengths, BnMode::kEval, nullptr);
  CHECK(same_values(aa.logits, ab.logits));

  SUBCASE("missing metadata is a config error") {
    Checkpoint bare;
    trainer.model().params.save_into(bare, "model/");
    const std::string path = cfg.out_dir + "/bare.ckpt";
    bare.save(path);
    CHECK_THROWS_WITH_AS(JointModel<float>::from_checkpoint(Checkpoint::load(path)),
                         doctest::Contains("metadata"), ConfigError);
  }
}

TEST_CASE("evaluation reports per-condition error tables") {
  RunConfig cfg = small_run_config("eval");
  cfg.max_epochs = 1;
  Trainer<float> trainer(cfg);
  trainer.run();

  const auto records = read_manifest(cfg.test_manifest);
  std::vector<Waveform> noises;
  for (const auto& p : find_noise_files(cfg.noise_dir)) noises.push_back(read_wav(p));

  EvalOptions opts;
  opts.snrs = {0.0};
  opts.seed = 9;
  opts.per_utterance = true;
  const EvalReport report = evaluate_model(trainer.model(), records, noises, opts);

  REQUIRE(report.conditions.size() == 2);
  CHECK(report.conditions[0].name == "clean");
  CHECK(report.conditions[0].is_clean);
  CHECK(report.conditions[1].name == "snr0dB");
  for (const ConditionReport& c : report.conditions) {
    CHECK(c.wer.utterances + c.skipped == static_cast<Index>(records.size()));
    CHECK(c.wer.corpus_wer() >= 0.0);
  }
  CHECK(report.rows.size() <= 2 * records.size());
  CHECK(report.rows.size() == static_cast<size_t>(report.conditions[0].wer.utterances +
                                                  report.conditions[1].wer.utterances));

  const std::string text = report.to_text();
  CHECK(text.find("clean") != std::string::npos);
  CHECK(text.find("snr0dB") != std::string::npos);
  CHECK(text.find("WER") != std::string::npos);
  const std::string tsv = report.rows_tsv();
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == static_cast<long>(report.rows.size()) + 1);

  SUBCASE("evaluation is deterministic") {
    const EvalReport again = evaluate_model(trainer.model(), records, noises, opts);
    REQUIRE(again.rows.size() == report.rows.size());
    for (size_t i = 0; i < report.rows.size(); ++i) {
      CHECK(again.rows[i].hyp == report.rows[i].hyp);
      CHECK(again.rows[i].counts.errors() == report.rows[i].counts.errors());
    }
  }

  SUBCASE("token ids beyond the model vocabulary are rejected") {
    auto bad = records;
    bad[0].tokens.push_back(99);
    CHECK_THROWS_WITH_AS(evaluate_model(trainer.model(), bad, noises, opts),
                         doctest::Contains("vocabulary"), ConfigError);
  }

  SUBCASE("noisy conditions without noise files are rejected") {
    CHECK_THROWS_AS(evaluate_model(trainer.model(), records, {}, opts), ConfigError);
  }

  SUBCASE("clean-only evaluation needs no noise") {
    EvalOptions clean_only;
    clean_only.snrs = {};
    const EvalReport r = evaluate_model(trainer.model(), records, {}, clean_only);
    REQUIRE(r.conditions.size() == 1);
    CHECK(r.conditions[0].name == "clean");
  }
}

TEST_CASE("sweep grids parse and cells are isolated") {
  SUBCASE("grid text round trip") {
    const auto grid = parse_sweep_grid("1:0;2:-1,1;3:-1,1,2;4:-2,-1,1,2");
    const auto def = default_sweep_grid();
    REQUIRE(grid.size() == 4);
    REQUIRE(def.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
      CHECK(grid[i].n == def[i].n);
      CHECK(grid[i].epsilons == def[i].epsilons);
    }
  }

  SUBCASE("malformed grids are rejected") {
    CHECK_THROWS_AS(parse_sweep_grid(""), ConfigError);
    CHECK_THROWS_AS(parse_sweep_grid("1"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_grid("x:1"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_grid("1:zz"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_sweep_grid("2:1"), doctest::Contains("gate count"), ConfigError);
  }

  SUBCASE("cells train, evaluate, and fail independently") {
    RunConfig base = small_run_config("sweep");
    base.max_epochs = 1;
    const std::vector<SweepCell> grid = {{2, {1.0, -1.0}}, {1, {0.0}}};
    const SweepResult result = run_sweep(base, grid);
    REQUIRE(result.cells.size() == 2);
    CHECK_FALSE(result.cells[0].ok);  // descending offsets never start training
    CHECK(result.cells[0].error.find("ascending") != std::string::npos);
    CHECK(result.cells[1].ok);
    CHECK(fs::exists(result.cells[1].checkpoint));
    REQUIRE(result.cells[1].report.conditions.size() >= 1);

    const std::string text = result.to_text();
    CHECK(text.find("FAILED") != std::string::npos);
    CHECK(text.find("clean") != std::string::npos);
  }
}

TEST_CASE("trainer constructor validates its inputs") {
  RunConfig cfg = small_run_config("ctorchk");

  SUBCASE("missing stats file points at the stats step") {
    fs::remove(cfg.stats_path);
    CHECK_THROWS_WITH_AS(Trainer<float>{cfg}, doctest::Contains("stats"), ConfigError);
  }

  SUBCASE("band count mismatch against the stats cache") {
    RunConfig narrow = cfg;
    narrow.fbank.q = 20;
    CHECK_THROWS_WITH_AS(Trainer<float>{narrow}, doctest::Contains("bands"), ConfigError);
  }

  SUBCASE("missing manifests") {
    RunConfig bad = cfg;
    bad.train_manifest = cfg.corpus_dir + "/nope.manifest";
    CHECK_THROWS_AS(Trainer<float>{bad}, IoError);
  }
}

}  // namespace
}  // namespace mcgasr
