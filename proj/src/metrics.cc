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

#include "mcgasr/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

double AlignmentCounts::wer() const {
  if (ref_len == 0) {
    if (errors() == 0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(errors()) / static_cast<double>(ref_len);
}

template <typename T>
std::vector<Index> greedy_ctc_decode(const Tensor<T>& logits) {
  if (logits.ndim() != 2) {
    throw ShapeError(str_cat("greedy_ctc_decode: logits must be (frames, vocab+1), got ",
                             shape_str(logits.shape())));
  }
  const Index t_len = logits.dim(0);
  const Index k = logits.dim(1);
  const T* z = logits.data();
  std::vector<Index> out;
  Index prev = -1;
  for (Index t = 0; t < t_len; ++t) {
    Index best = 0;
    for (Index j = 1; j < k; ++j) {
      if (z[t * k + j] > z[t * k + best]) best = j;
    }
    if (best != 0 && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

AlignmentCounts wer_align(const std::vector<Index>& ref, const std::vector<Index>& hyp) {
  const Index nr = static_cast<Index>(ref.size());
  const Index nh = static_cast<Index>(hyp.size());
  // dp[i][j]: minimal edits aligning ref[0..i) with hyp[0..j).
  std::vector<Index> dp(static_cast<size_t>((nr + 1) * (nh + 1)), 0);
  auto at = [nh](Index i, Index j) { return static_cast<size_t>(i * (nh + 1) + j); };
  for (Index i = 0; i <= nr; ++i) dp[at(i, 0)] = i;
  for (Index j = 0; j <= nh; ++j) dp[at(0, j)] = j;
  for (Index i = 1; i <= nr; ++i) {
    for (Index j = 1; j <= nh; ++j) {
      Index match = ref[static_cast<size_t>(i - 1)] == hyp[static_cast<size_t>(j - 1)] ? 0 : 1;
      dp[at(i, j)] = std::min({dp[at(i - 1, j - 1)] + match, dp[at(i - 1, j)] + 1,
                               dp[at(i, j - 1)] + 1});
    }
  }

  AlignmentCounts c;
  c.ref_len = nr;
  Index i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      Index match = ref[static_cast<size_t>(i - 1)] == hyp[static_cast<size_t>(j - 1)] ? 0 : 1;
      if (dp[at(i, j)] == dp[at(i - 1, j - 1)] + match) {
        if (match) ++c.sub;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[at(i, j)] == dp[at(i - 1, j)] + 1) {
      ++c.del;
      --i;
      continue;
    }
    ++c.ins;
    --j;
  }
  c.infinite = nr == 0 && nh > 0;
  return c;
}

void WerSummary::add(const AlignmentCounts& a) {
  totals.sub += a.sub;
  totals.del += a.del;
  totals.ins += a.ins;
  totals.ref_len += a.ref_len;
  totals.infinite = totals.infinite || a.infinite;
  const double k = static_cast<double>(utterances);
  const double k1 = k + 1;
  mean_sub = (mean_sub * k + static_cast<double>(a.sub)) / k1;
  mean_del = (mean_del * k + static_cast<double>(a.del)) / k1;
  mean_ins = (mean_ins * k + static_cast<double>(a.ins)) / k1;
  mean_wer = (mean_wer * k + a.wer()) / k1;
  ++utterances;
}

double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate) {
  if (reference.size() != estimate.size()) {
    throw ShapeError(str_cat("si_sdr: length mismatch ", reference.size(), " vs ",
                             estimate.size()));
  }
  if (reference.empty()) throw ShapeError("si_sdr: empty signals");
  const size_t n = reference.size();
  double mr = 0, me = 0;
  for (size_t i = 0; i < n; ++i) {
    mr += reference[i];
    me += estimate[i];
  }
  mr /= static_cast<double>(n);
  me /= static_cast<double>(n);

  double dot = 0, rr = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = reference[i] - mr;
    double e = estimate[i] - me;
    dot += e * r;
    rr += r * r;
  }
  if (rr <= 0) throw NumericError("si_sdr: zero-power reference");

  const double gain = dot / rr;
  double target = 0, residual = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = reference[i] - mr;
    double e = estimate[i] - me;
    double s = gain * r;
    target += s * s;
    residual += (e - s) * (e - s);
  }
  if (target <= 0) return -120.0;
  if (residual <= 0) return 120.0;
  double value = 10.0 * std::log10(target / residual);
  return std::clamp(value, -120.0, 120.0);
}

double si_sdr(const Waveform& reference, const Waveform& estimate) {
  if (reference.sample_rate != estimate.sample_rate) {
    throw ConfigError(str_cat("si_sdr: sample rate mismatch ", reference.sample_rate, " vs ",
                              estimate.sample_rate));
  }
  return si_sdr(reference.samples, estimate.samples);
}

template std::vector<Index> greedy_ctc_decode<float>(const Tensor<float>&);
template std::vector<Index> greedy_ctc_decode<double>(const Tensor<double>&);

}  // namespace mcgasr
