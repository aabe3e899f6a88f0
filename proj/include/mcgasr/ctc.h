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

#ifndef MCGASR_CTC_H_
#define MCGASR_CTC_H_

#include <vector>

#include "mcgasr/tensor.h"

namespace mcgasr {

// Frames needed to emit the target: its length plus one extra frame per
// adjacent repeated token (a blank must separate repeats).
Index ctc_min_frames(const std::vector<Index>& target);

// Negative log-likelihood of the target under the blank-augmented label
// lattice, computed with a log-space forward pass. Blank is index 0; target
// ids must lie in 1..V for logits with V+1 columns. The backward pass uses
// the forward/backward occupancy form and is exact, not an approximation.
//
// logits: (T, V+1) for a single utterance, pre-softmax.
// Throws ShapeError when T is too short for the target, ConfigError for
// out-of-range ids.
template <typename T>
Tensor<T> ctc_loss(const Tensor<T>& logits, const std::vector<Index>& target);

// Mean per-utterance loss over a padded batch. logits: (B, Tmax, V+1);
// lengths gives each utterance's valid frame count.
template <typename T>
Tensor<T> ctc_loss_batch(const Tensor<T>& logits, const std::vector<Index>& lengths,
                         const std::vector<std::vector<Index>>& targets);

}  // namespace mcgasr

#endif  // MCGASR_CTC_H_
