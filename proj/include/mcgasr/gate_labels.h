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

#ifndef MCGASR_GATE_LABELS_H_
#define MCGASR_GATE_LABELS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mcgasr/dsp.h"

namespace mcgasr {

// Per-bin mean and population standard deviation of the clean corpus'
// per-clip time-means. Computed once over the training clean set and frozen;
// labels must be consistent across epochs and splits.
struct CorpusStats {
  Index q = 0;
  Index d = 0;  // number of clips
  std::vector<double> mu;
  std::vector<double> sigma;
};

CorpusStats corpus_stats(const std::vector<LogFbank>& clean_set);

// kappas[i] = mu + epsilons[i] * sigma, one row per offset.
struct ThresholdSet {
  std::vector<double> epsilons;  // ascending
  Index q = 0;
  std::vector<double> kappas;  // row-major n x q

  Index n() const { return static_cast<Index>(epsilons.size()); }
  double kappa(Index i, Index qi) const { return kappas[static_cast<size_t>(i * q + qi)]; }
};

ThresholdSet make_thresholds(const CorpusStats& stats, std::vector<double> epsilons);

// Binary speech-presence mask for one offset; 1 where the clean log-Fbank
// value reaches the threshold (the boundary itself counts as speech).
struct GateLabel {
  Index t = 0;
  Index q = 0;
  double epsilon = 0.0;
  std::vector<std::uint8_t> values;  // row-major t x q over {0,1}

  std::uint8_t at(Index ti, Index qi) const { return values[static_cast<size_t>(ti * q + qi)]; }
};

std::vector<GateLabel> make_gate_labels(const LogFbank& x_clean, const ThresholdSet& thresholds);

// Stats cache: header (Q, D, epsilons), then mu and sigma as f64.
void write_stats(const std::string& path, const CorpusStats& stats,
                 const std::vector<double>& epsilons);
CorpusStats read_stats(const std::string& path, std::vector<double>* epsilons_out = nullptr);

}  // namespace mcgasr

#endif  // MCGASR_GATE_LABELS_H_
