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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcgasr/trainer.h"

namespace {

namespace fs = std::filesystem;
using namespace mcgasr;

// Leftover arguments of the form --section.key=value become config
// overrides; anything else is a usage error.
std::vector<std::string> overrides_from(const CLI::App& sub) {
  std::vector<std::string> overrides;
  for (const std::string& arg : sub.remaining()) {
    if (arg.rfind("--", 0) != 0 || arg.find('=') == std::string::npos) {
      throw ConfigError(str_cat("unrecognized argument '", arg,
                                "' (config overrides look like --train.lr=0.0002)"));
    }
    overrides.push_back(arg.substr(2));
  }
  return overrides;
}

int cmd_synth(const ToyCorpusConfig& cfg) {
  const SynthResult res = synth_toy_corpus(cfg);
  std::cout << "wrote " << res.num_utterances << " utterances under " << cfg.out_dir << "\n"
            << "train manifest: " << res.train_manifest << "\n"
            << "dev manifest:   " << res.dev_manifest << "\n"
            << "test manifest:  " << res.test_manifest << "\n"
            << "noise files:    " << res.noise_paths.size() << "\n";
  return 0;
}

int cmd_stats(const RunConfig& cfg) {
  const auto records = read_manifest(cfg.train_manifest);
  std::vector<LogFbank> feats;
  feats.reserve(records.size());
  for (const UtteranceRecord& rec : records) {
    feats.push_back(wav_to_log_fbank(read_wav(rec.wav_path), cfg.stft, cfg.fbank));
  }
  const CorpusStats stats = corpus_stats(feats);
  write_stats(cfg.stats_path, stats, cfg.epsilons);
  std::cout << "wrote " << cfg.stats_path << " (bands " << stats.q << ", clips " << stats.d
            << ")\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume) {
  Trainer<float> trainer(cfg);
  if (!resume.empty()) {
    trainer.restore(resume);
    std::cout << "resumed from " << resume << " at epoch " << trainer.start_epoch() << "\n";
  }
  const TrainResult res = trainer.run();
  std::cout << "epochs " << res.epochs_run << " steps " << res.steps << " best_val "
            << res.best_val << (res.plateau_stopped ? " (stopped on plateau)" : "") << "\n"
            << "best checkpoint: " << res.best_checkpoint << "\n"
            << "last checkpoint: " << res.last_checkpoint << "\n"
            << "log: " << res.log_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::string checkpoint, std::string manifest) {
  if (checkpoint.empty()) checkpoint = (fs::path(cfg.out_dir) / "best.ckpt").string();
  if (manifest.empty()) manifest = cfg.test_manifest;

  const JointModel<float> model =
      JointModel<float>::from_checkpoint(Checkpoint::load(checkpoint));
  const auto records = read_manifest(manifest);
  std::vector<Waveform> noises;
  if (!cfg.eval_snrs.empty()) {
    for (const std::string& p : find_noise_files(cfg.noise_dir)) noises.push_back(read_wav(p));
  }

  EvalOptions opts;
  opts.snrs = cfg.eval_snrs;
  opts.seed = Rng(cfg.seed).derive_seed("eval");
  opts.per_utterance = cfg.eval_per_utterance;
  const EvalReport report = evaluate_model(model, records, noises, opts);
  std::cout << report.to_text();
  if (opts.per_utterance) {
    const std::string rows_path = (fs::path(cfg.out_dir) / "eval_rows.tsv").string();
    fs::create_directories(cfg.out_dir);
    std::ofstream os(rows_path);
    if (!os) throw IoError(str_cat("cannot write ", rows_path));
    os << report.rows_tsv();
    std::cout << "per-utterance rows: " << rows_path << "\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& grid_text) {
  const std::vector<SweepCell> grid =
      grid_text.empty() ? default_sweep_grid() : parse_sweep_grid(grid_text);
  const SweepResult result = run_sweep(cfg, grid);
  const std::string text = result.to_text();
  std::cout << text;
  fs::create_directories(cfg.out_dir);
  const std::string report_path = (fs::path(cfg.out_dir) / "sweep.txt").string();
  std::ofstream os(report_path);
  if (!os) throw IoError(str_cat("cannot write ", report_path));
  os << text;
  std::cout << "report: " << report_path << "\n";
  for (const SweepCellResult& cell : result.cells) {
    if (!cell.ok) return 1;  // partial failure is visible in the exit status
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence-gated speech enhancement trained jointly with a CTC recognizer"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the deterministic toy corpus");
  ToyCorpusConfig toy;
  synth->add_option("--out", toy.out_dir, "corpus output directory")->required();
  synth->add_option("--vocab", toy.vocab, "token vocabulary size");
  synth->add_option("--train", toy.num_train, "training utterances");
  synth->add_option("--dev", toy.num_dev, "development utterances");
  synth->add_option("--test", toy.num_test, "test utterances");
  synth->add_option("--min-tokens", toy.min_tokens, "shortest transcript");
  synth->add_option("--max-tokens", toy.max_tokens, "longest transcript");
  synth->add_option("--token-seconds", toy.token_seconds, "seconds per token");
  synth->add_option("--gap-seconds", toy.gap_seconds, "silence between tokens");
  synth->add_option("--edge-seconds", toy.edge_seconds, "silence at clip edges");
  synth->add_option("--white", toy.num_white_noise, "white noise files");
  synth->add_option("--babble", toy.num_babble_noise, "babble noise files");
  synth->add_option("--noise-seconds", toy.noise_seconds, "seconds per noise file");
  synth->add_option("--sample-rate", toy.sample_rate, "sample rate in Hz");
  synth->add_option("--seed", toy.seed, "corpus seed");

  // config-driven subcommands share the --config pattern
  std::string config_path, resume_path, checkpoint_path, manifest_path, grid_text;
  auto* stats = app.add_subcommand("stats", "cache clean-corpus feature statistics");
  auto* train = app.add_subcommand("train", "run the joint training loop");
  auto* eval = app.add_subcommand("eval", "decode a test manifest and report error tables");
  auto* sweep = app.add_subcommand("sweep", "train and evaluate a gate-count grid");
  for (CLI::App* sub : {stats, train, eval, sweep}) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->allow_extras();
  }
  train->add_option("--resume", resume_path, "continue from this checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint to load (default best.ckpt)");
  eval->add_option("--manifest", manifest_path, "manifest to decode (default test manifest)");
  sweep->add_option("--grid", grid_text, "cells as n:eps,...;n:eps,... (default published grid)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(toy);
    CLI::App* sub = app.get_subcommands().front();
    const RunConfig cfg = load_run_config(config_path, overrides_from(*sub));
    if (stats->parsed()) return cmd_stats(cfg);
    if (train->parsed()) return cmd_train(cfg, resume_path);
    if (eval->parsed()) return cmd_eval(cfg, checkpoint_path, manifest_path);
    if (sweep->parsed()) return cmd_sweep(cfg, grid_text);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
