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

#ifndef MCGASR_METRICS_H_
#define MCGASR_METRICS_H_

#include <string>
#include <vector>

#include "mcgasr/dsp.h"
#include "mcgasr/tensor.h"

namespace mcgasr {

// Error composition of one minimal-cost alignment between a reference and a
// hypothesis token sequence.
struct AlignmentCounts {
  Index sub = 0;
  Index del = 0;
  Index ins = 0;
  Index ref_len = 0;
  // Set when the reference is empty but the hypothesis is not; the rate is
  // undefined (division by zero) in that case.
  bool infinite = false;

  Index errors() const { return sub + del + ins; }
  double wer() const;
};

// Argmax per frame, collapse repeats, drop blanks (id 0).
// logits: (T, V+1) for one utterance.
template <typename T>
std::vector<Index> greedy_ctc_decode(const Tensor<T>& logits);

// Unit-cost Levenshtein alignment. When several predecessors tie on cost the
// backtrace prefers substitution over deletion over insertion, so the counts
// are deterministic.
AlignmentCounts wer_align(const std::vector<Index>& ref, const std::vector<Index>& hyp);

// Corpus aggregation: summed counts for the corpus-level rate plus
// per-utterance means, since per-utterance normalization differs between
// toolkits.
struct WerSummary {
  AlignmentCounts totals;
  Index utterances = 0;
  double mean_sub = 0, mean_del = 0, mean_ins = 0, mean_wer = 0;

  void add(const AlignmentCounts& c);
  double corpus_wer() const { return totals.wer(); }
};

// Scale-invariant signal-to-distortion ratio in dB. Both signals are
// mean-centered, the estimate is projected onto the reference, and the
// result is clamped to [-120, 120] so exact matches and zero projections
// stay finite. Throws on length mismatch or a zero-power reference.
double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate);
double si_sdr(const Waveform& reference, const Waveform& estimate);

}  // namespace mcgasr

#endif  // MCGASR_METRICS_H_
