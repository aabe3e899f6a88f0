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

#ifndef MCGASR_LOSSES_H_
#define MCGASR_LOSSES_H_

#include <vector>

#include "mcgasr/tensor.h"

namespace mcgasr {

// Component weights for the joint objective. The defaults reproduce the
// plain unweighted four-term sum; zeroing all but ctc gives recognizer-only
// training.
template <typename T>
struct JointLossWeights {
  T gate = 1;      // confidence-gate supervision
  T filtered = 1;  // gated-feature consistency
  T encoder = 1;   // encoder-output consistency
  T ctc = 1;       // recognition
};

template <typename T>
struct JointLossBreakdown {
  Tensor<T> l_g, l_r, l_o, l_ctc;
  Tensor<T> total;
  JointLossWeights<T> weights;
};

// Repeats a (B, T) frame mask across `width` inner elements, producing a
// grad-free (B, T, width) tensor for element-weighted reductions.
template <typename T>
Tensor<T> expand_mask(const Tensor<T>& frame_mask, Index width);

// Mean absolute difference. With a mask (same shape as a, values 0/1), the
// mean runs over included elements only; an all-zero mask is an error.
template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& mask = {});

// Sum over heads of the masked mean L1 between predicted gates and binary
// labels. Labels must be constants (no gradient).
template <typename T>
Tensor<T> gate_loss(const std::vector<Tensor<T>>& gates, const std::vector<Tensor<T>>& labels,
                    const Tensor<T>& mask = {});

// Sum over heads of the masked mean L1 between noisy-path gated features and
// the detached clean-path ones. Throws when a clean tensor still carries
// gradient lineage.
template <typename T>
Tensor<T> filtered_consistency_loss(const std::vector<Tensor<T>>& noisy,
                                    const std::vector<Tensor<T>>& clean_detached,
                                    const Tensor<T>& mask = {});

// Masked mean L1 between noisy and detached clean encoder outputs.
template <typename T>
Tensor<T> encoder_consistency_loss(const Tensor<T>& noisy, const Tensor<T>& clean_detached,
                                   const Tensor<T>& mask = {});

// Weighted sum of the four parts. Throws NumericError naming the component
// when a part is non-finite.
template <typename T>
JointLossBreakdown<T> total_loss(const Tensor<T>& l_g, const Tensor<T>& l_r,
                                 const Tensor<T>& l_o, const Tensor<T>& l_ctc,
                                 const JointLossWeights<T>& weights = {});

}  // namespace mcgasr

#endif  // MCGASR_LOSSES_H_
