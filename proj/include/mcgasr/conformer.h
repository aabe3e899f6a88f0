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

#ifndef MCGASR_CONFORMER_H_
#define MCGASR_CONFORMER_H_

#include <optional>
#include <string>
#include <vector>

#include "mcgasr/layers.h"
#include "mcgasr/rng.h"
#include "mcgasr/tensor.h"

namespace mcgasr {

// Conformer encoder with convolutional subsampling (factor 4 in time) and a
// linear projection head for CTC training. Input features are normalized by
// batch-norm rather than per-utterance mean/variance, and positions enter as
// sinusoidal absolute encodings added after subsampling.
struct ConformerConfig {
  enum class InputNorm { kBatchNorm };

  Index num_blocks = 2;
  Index d_model = 64;
  Index ffn_dim = 128;
  Index heads = 4;
  Index conv_kernel = 15;  // depthwise kernel over time, must be odd
  Index vocab = 0;         // real tokens; logits carry vocab + 1 columns, blank at 0
  Index q = 80;            // input feature bins per frame
  double dropout = 0.1;
  InputNorm input_norm = InputNorm::kBatchNorm;

  // Full-size configuration: 12 blocks of width 256 with 2048 feed-forward
  // units. The small configuration keeps the same topology at test scale.
  static ConformerConfig full(Index vocab, Index q = 80);
  static ConformerConfig small(Index vocab, Index q = 40);

  static constexpr Index kMinFrames = 8;  // two stride-2 convolutions need this many
  Index subsample_factor() const { return 4; }
  // Frame count after the two stride-2 convolutions (ceil(t / 4)).
  Index subsampled_len(Index t) const;
  void validate() const;
};

template <typename T>
struct AsrOutput {
  Tensor<T> encoded;               // (B, T', d_model)
  Tensor<T> logits;                // (B, T', vocab + 1), no softmax applied
  std::vector<Index> out_lengths;  // valid frames per utterance after subsampling
};

template <typename T>
class ConformerAsr {
 public:
  ConformerAsr(const ConformerConfig& cfg, Rng& rng, ParamMap<T>& params,
               const std::string& prefix = "asr/");

  // x: (B, T, Q). lengths gives valid frames per utterance (empty = all T);
  // frames past a length are treated as padding by the attention mask.
  // dropout_rng enables dropout; pass nullptr for deterministic passes.
  AsrOutput<T> forward(const Tensor<T>& x, const std::vector<Index>& lengths, BnMode mode,
                       Rng* dropout_rng = nullptr) const;

  // Convolutional subsampling stage alone: input batch-norm, two stride-2
  // convolutions with swish, flatten, linear projection, dropout. Returns
  // (B, T', d_model) without positional encodings.
  Tensor<T> subsample(const Tensor<T>& x, BnMode mode, Rng* dropout_rng = nullptr) const;

  // Single encoder block on an already subsampled (B, T', d_model) input.
  // Exposed so tests can probe the residual structure in isolation.
  Tensor<T> block_forward(size_t idx, const Tensor<T>& x, const std::vector<Index>& lengths,
                          BnMode mode, Rng* dropout_rng = nullptr) const;
  // The multi-head self-attention sublayer of block idx, without residual.
  Tensor<T> self_attention(size_t idx, const Tensor<T>& x,
                           const std::vector<Index>& lengths) const;

  const ConformerConfig& config() const { return cfg_; }

 private:
  struct Block {
    Linear<T> ffn1_in, ffn1_out;
    Linear<T> wq, wk, wv, wo;
    Linear<T> conv_pw1, conv_pw2;
    DepthwiseConv1d<T> conv_dw;
    BatchNorm<T> conv_bn;
    Linear<T> ffn2_in, ffn2_out;
    LayerNorm<T> ln;
  };

  Tensor<T> feed_forward(const Linear<T>& in, const Linear<T>& out, const Tensor<T>& x,
                         BnMode mode, Rng* dropout_rng) const;
  Tensor<T> conv_module(const Block& blk, const Tensor<T>& x, BnMode mode) const;
  Tensor<T> positional_encoding(Index b, Index t) const;

  ConformerConfig cfg_;
  std::optional<BatchNorm<T>> input_bn_;
  std::optional<Conv2d<T>> sub_conv0_, sub_conv1_;
  std::optional<Linear<T>> sub_proj_;
  std::vector<Block> blocks_;
  std::optional<Linear<T>> ctc_head_;
};

}  // namespace mcgasr

#endif  // MCGASR_CONFORMER_H_
