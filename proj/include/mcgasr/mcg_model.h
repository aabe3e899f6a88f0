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

#ifndef MCGASR_MCG_MODEL_H_
#define MCGASR_MCG_MODEL_H_

#include <optional>
#include <string>
#include <vector>

#include "mcgasr/layers.h"
#include "mcgasr/rng.h"
#include "mcgasr/tensor.h"

namespace mcgasr {

// Convolutional recurrent enhancement network with one sigmoid gate head per
// confidence level. The encoder halves the frequency axis at every stride-2
// stage while time is never downsampled, an LSTM plus a linear layer bridge
// the deepest feature map, and the decoder mirrors the encoder with skip
// concatenation. The last decoder stage emits head_channels * num_gates
// channels; head i reads its own head_channels slice.
struct McgConfig {
  Index q = 80;             // input feature bins per frame
  Index num_gates = 4;      // number of confidence gates n
  Index head_channels = 10; // decoder channels feeding each gate head
  std::vector<Index> encoder_channels = {32, 48, 64, 80, 96};
  std::vector<Index> freq_strides = {1, 1, 2, 2, 1};  // time stride is always 1
  Index lstm_units = 128;

  // Full-size configuration: 80 bins, five stages up to 96 channels, 128
  // LSTM units, so the bridge works on a flattened width of 96 * 20 = 1920.
  static McgConfig full(Index num_gates = 4);
  // Small configuration for fast tests and single-core training runs.
  static McgConfig small(Index num_gates = 3);

  Index total_freq_stride() const;
  Index deepest_q() const { return q / total_freq_stride(); }
  Index flat_width() const { return encoder_channels.back() * deepest_q(); }
  // Throws ConfigError when the geometry cannot round-trip through the
  // encoder/decoder pair (for example q not divisible by the total stride).
  void validate() const;
};

template <typename T>
struct McgOutput {
  std::vector<Tensor<T>> gates;  // G_i, each (B, T, Q), values in (0, 1)
  std::vector<Tensor<T>> gated;  // R_i = G_i * X, each (B, T, Q)
  Tensor<T> fused;               // fused enhanced features, (B, T, Q)
};

// Elementwise product of each gate with the raw input features. Kept as a
// free function so tests can drive it directly.
template <typename T>
std::vector<Tensor<T>> apply_gates(const std::vector<Tensor<T>>& gates, const Tensor<T>& x);

template <typename T>
class McgModel {
 public:
  // Registers every parameter under prefix + "enc...", "dec...", "head...".
  McgModel(const McgConfig& cfg, Rng& rng, ParamMap<T>& params,
           const std::string& prefix = "mcg/");

  // x: (B, T, Q) noisy log filterbank features.
  McgOutput<T> forward(const Tensor<T>& x, BnMode mode) const;

  const McgConfig& config() const { return cfg_; }

 private:
  struct EncBlock {
    Conv2d<T> conv;
    BatchNorm<T> bn;
    PRelu<T> act;
  };
  struct DecBlock {
    ConvTranspose2d<T> conv;
    BatchNorm<T> bn;
    PRelu<T> act;
  };

  McgConfig cfg_;
  std::vector<EncBlock> enc_;
  // Bridge across time at the deepest resolution.
  std::optional<Lstm<T>> lstm_;
  std::optional<Linear<T>> fc_;
  std::vector<DecBlock> dec_;
  std::vector<Index> dec_in_channels_;
  std::vector<Conv2d<T>> heads_;  // 1x1 convs, head_channels -> 1
  // Fusion block collapsing the num_gates gated copies to one map.
  std::optional<Conv2d<T>> fuse_conv_;
  std::optional<BatchNorm<T>> fuse_bn_;
  std::optional<PRelu<T>> fuse_act_;
};

}  // namespace mcgasr

#endif  // MCGASR_MCG_MODEL_H_
