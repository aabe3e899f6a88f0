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

#ifndef MCGASR_DATA_H_
#define MCGASR_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mcgasr/common.h"
#include "mcgasr/dsp.h"
#include "mcgasr/gate_labels.h"
#include "mcgasr/rng.h"
#include "mcgasr/tensor.h"

namespace mcgasr {

// One corpus entry: a clean recording and its transcript as 1-based token
// ids (0 is reserved for the CTC blank).
struct UtteranceRecord {
  std::string id;
  std::string wav_path;
  std::vector<int> tokens;
};

// Manifest lines are "id wav_path tok1 tok2 ...". Transcripts must be
// non-empty and ids must not repeat within one manifest.
std::vector<UtteranceRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<UtteranceRecord>& records);

// Largest token id present; 0 for an empty record list.
int max_token_id(const std::vector<UtteranceRecord>& records);

// ---------------------------------------------------------------------------
// Toy corpus synthesis
// ---------------------------------------------------------------------------

struct ToyCorpusConfig {
  std::string out_dir;
  int vocab = 8;           // token ids 1..vocab
  int num_train = 24;
  int num_dev = 6;
  int num_test = 6;
  int min_tokens = 3;
  int max_tokens = 8;
  double token_seconds = 0.12;
  double gap_seconds = 0.03;   // silence between tokens, gives CTC a blank
  double edge_seconds = 0.05;  // leading and trailing silence
  int num_white_noise = 2;
  int num_babble_noise = 2;
  double noise_seconds = 4.0;
  int sample_rate = 16000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthResult {
  std::string train_manifest;
  std::string dev_manifest;
  std::string test_manifest;
  std::vector<std::string> noise_paths;
  int num_utterances = 0;
};

// Deterministic per-token timbre: two fixed harmonics with a short
// raised-cosine fade at both ends so concatenations do not click.
Waveform token_template(int token, int sample_rate, double seconds);

// Concatenation of token templates separated by gap_seconds of silence,
// with edge_seconds of silence at the head and tail.
Waveform render_tokens(const std::vector<int>& tokens, const ToyCorpusConfig& cfg);

// Writes wav/<id>.wav per utterance, noise/*.wav, and the three manifests
// under cfg.out_dir. The same seed reproduces the corpus byte for byte.
SynthResult synth_toy_corpus(const ToyCorpusConfig& cfg);

// All .wav files directly under dir, sorted by name.
std::vector<std::string> find_noise_files(const std::string& dir);

// ---------------------------------------------------------------------------
// SNR mixing
// ---------------------------------------------------------------------------

struct MixSpec {
  double snr_db = 0.0;
  Index noise_id = 0;     // index into the noise set, bookkeeping only
  Index crop_offset = 0;  // start sample within the noise file
  std::uint64_t seed = 0;
};

struct MixResult {
  Waveform mixture;
  double noise_gain = 0.0;  // applied to the noise crop before summing
  double peak_gain = 1.0;   // joint rescale that kept the sum within (-1, 1)
  bool looped = false;      // crop wrapped around the end of the noise file
};

// noise_gain solves 10*log10(P_clean / (g^2 * P_noise)) == snr_db over the
// whole clip; the crop loops when offset + clean length exceeds the noise.
// Both signals at rest (zero power) is a NumericError, unequal sample rates
// a ConfigError.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, const MixSpec& spec);

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

// One training batch. Feature tensors are zero-padded to the longest clip;
// frame_mask is 1 on real frames and 0 on padding. labels[i] matches
// thresholds.epsilons[i]. Clean and noisy features come from the same
// utterance with identical framing.
template <typename T>
struct Batch {
  Tensor<T> noisy;                  // (B, T, Q)
  Tensor<T> clean;                  // (B, T, Q)
  std::vector<Tensor<T>> labels;    // n tensors, each (B, T, Q)
  Tensor<T> frame_mask;             // (B, T)
  std::vector<Index> lengths;       // true frame counts
  std::vector<std::vector<int>> tokens;
  std::vector<std::string> ids;
  std::vector<double> snrs;

  Index size() const { return static_cast<Index>(ids.size()); }
};

// Deterministic epoch stream of paired clean/noisy features with gate
// labels. Mixtures are drawn on the fly: the draw for (epoch, utterance) is
// seeded independently, so any batch is reproducible in isolation.
template <typename T>
class Batcher {
 public:
  struct Config {
    Index batch_size = 4;
    Index max_frames = 0;  // 0 disables the budget
    double snr_lo = -5.0;
    double snr_hi = 20.0;
    std::uint64_t seed = 1;
    bool redraw_noise_each_epoch = true;
    StftConfig stft;
    FbankConfig fbank;
  };

  // Loads every clean wav up front; records over the frame budget or too
  // short to frame are dropped and counted in skipped().
  Batcher(const std::vector<UtteranceRecord>& records, const std::vector<Waveform>& noises,
          const ThresholdSet& thresholds, const Config& cfg);

  Index num_utterances() const { return static_cast<Index>(items_.size()); }
  Index num_batches() const;
  Index skipped() const { return skipped_; }
  const Config& config() const { return cfg_; }

  // Permutation of utterance indices for one epoch, a pure function of
  // (seed, epoch).
  std::vector<Index> epoch_order(Index epoch) const;

  Batch<T> batch(Index epoch, Index index) const;

 private:
  struct Item {
    UtteranceRecord record;
    Waveform clean;
    Index frames = 0;
  };

  Config cfg_;
  ThresholdSet thresholds_;
  std::vector<Waveform> noises_;
  std::vector<Item> items_;
  Index skipped_ = 0;
};

}  // namespace mcgasr

#endif  // MCGASR_DATA_H_
