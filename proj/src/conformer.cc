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

#include "mcgasr/conformer.h"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

namespace {

// Applies a linear layer to every (batch, time) row of a rank-3 tensor.
template <typename T>
Tensor<T> rowwise(const Linear<T>& lin, const Tensor<T>& x) {
  Index b = x.dim(0), t = x.dim(1), d = x.dim(2);
  return reshape(lin.forward(reshape(x, {b * t, d})), {b, t, lin.out_features()});
}

// Additive key mask: zero on valid columns, a large negative value on padded
// ones, so softmax assigns padded keys vanishing weight.
template <typename T>
Tensor<T> key_mask(Index t, Index valid) {
  std::vector<T> data(static_cast<size_t>(t * t), T{0});
  for (Index r = 0; r < t; ++r) {
    for (Index c = valid; c < t; ++c) data[static_cast<size_t>(r * t + c)] = static_cast<T>(-1e9);
  }
  return Tensor<T>::from_data({t, t}, std::move(data));
}

}  // namespace

ConformerConfig ConformerConfig::full(Index vocab, Index q) {
  ConformerConfig cfg;
  cfg.num_blocks = 12;
  cfg.d_model = 256;
  cfg.ffn_dim = 2048;
  cfg.vocab = vocab;
  cfg.q = q;
  return cfg;
}

ConformerConfig ConformerConfig::small(Index vocab, Index q) {
  ConformerConfig cfg;
  cfg.vocab = vocab;
  cfg.q = q;
  return cfg;
}

Index ConformerConfig::subsampled_len(Index t) const {
  Index l1 = (t - 1) / 2 + 1;
  return (l1 - 1) / 2 + 1;
}

void ConformerConfig::validate() const {
  if (num_blocks < 1) throw ConfigError("conformer: num_blocks must be at least 1");
  if (d_model < 1 || ffn_dim < 1) throw ConfigError("conformer: zero-width layer");
  if (heads < 1 || d_model % heads != 0) {
    throw ConfigError(str_cat("conformer: d_model=", d_model, " not divisible by ", heads,
                              " heads"));
  }
  if (conv_kernel < 1 || conv_kernel % 2 == 0) {
    throw ConfigError(str_cat("conformer: depthwise kernel must be odd, got ", conv_kernel));
  }
  if (vocab < 1) throw ConfigError("conformer: vocab must be at least 1");
  if (q < 1) throw ConfigError("conformer: q must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError(str_cat("conformer: dropout must lie in [0, 1), got ", dropout));
  }
}

template <typename T>
ConformerAsr<T>::ConformerAsr(const ConformerConfig& cfg, Rng& rng, ParamMap<T>& params,
                              const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const Index d = cfg_.d_model;

  input_bn_.emplace(prefix + "input_bn", cfg_.q, 2, params);

  Conv2dSpec half;
  half.stride_t = 2;
  half.stride_f = 2;
  half.pad_t = 1;
  half.pad_f = 1;
  sub_conv0_.emplace(prefix + "csl.conv0", 1, d, 3, 3, half, rng, params);
  sub_conv1_.emplace(prefix + "csl.conv1", d, d, 3, 3, half, rng, params);
  Index q2 = cfg_.subsampled_len(cfg_.q);
  sub_proj_.emplace(prefix + "csl.proj", d * q2, d, rng, params);

  for (Index i = 0; i < cfg_.num_blocks; ++i) {
    std::string base = str_cat(prefix, "blk", i);
    blocks_.push_back(Block{
        Linear<T>(base + ".ffn1.lin1", d, cfg_.ffn_dim, rng, params),
        Linear<T>(base + ".ffn1.lin2", cfg_.ffn_dim, d, rng, params),
        Linear<T>(base + ".att.q", d, d, rng, params),
        Linear<T>(base + ".att.k", d, d, rng, params),
        Linear<T>(base + ".att.v", d, d, rng, params),
        Linear<T>(base + ".att.o", d, d, rng, params),
        Linear<T>(base + ".conv.pw1", d, 2 * d, rng, params),
        Linear<T>(base + ".conv.pw2", d, d, rng, params),
        DepthwiseConv1d<T>(base + ".conv.dw", d, cfg_.conv_kernel, (cfg_.conv_kernel - 1) / 2,
                           rng, params),
        BatchNorm<T>(base + ".conv.bn", d, 1, params),
        Linear<T>(base + ".ffn2.lin1", d, cfg_.ffn_dim, rng, params),
        Linear<T>(base + ".ffn2.lin2", cfg_.ffn_dim, d, rng, params),
        LayerNorm<T>(base + ".ln", d, params),
    });
  }

  ctc_head_.emplace(prefix + "ctc", d, cfg_.vocab + 1, rng, params);
}

template <typename T>
Tensor<T> ConformerAsr<T>::positional_encoding(Index b, Index t) const {
  const Index d = cfg_.d_model;
  std::vector<T> data(static_cast<size_t>(b * t * d));
  for (Index pos = 0; pos < t; ++pos) {
    for (Index i = 0; i < d; i += 2) {
      double angle = static_cast<double>(pos) /
                     std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      data[static_cast<size_t>(pos * d + i)] = static_cast<T>(std::sin(angle));
      if (i + 1 < d) data[static_cast<size_t>(pos * d + i + 1)] = static_cast<T>(std::cos(angle));
    }
  }
  for (Index bi = 1; bi < b; ++bi) {
    std::copy_n(data.begin(), t * d, data.begin() + bi * t * d);
  }
  return Tensor<T>::from_data({b, t, d}, std::move(data));
}

template <typename T>
Tensor<T> ConformerAsr<T>::feed_forward(const Linear<T>& in, const Linear<T>& out,
                                        const Tensor<T>& x, BnMode mode,
                                        Rng* dropout_rng) const {
  Tensor<T> h = swish(rowwise(in, x));
  if (mode == BnMode::kTrain && dropout_rng != nullptr && cfg_.dropout > 0.0) {
    h = dropout(h, static_cast<T>(cfg_.dropout), true, *dropout_rng);
  }
  return rowwise(out, h);
}

template <typename T>
Tensor<T> ConformerAsr<T>::conv_module(const Block& blk, const Tensor<T>& x, BnMode mode) const {
  Tensor<T> h = glu(rowwise(blk.conv_pw1, x), 2);
  h = permute(h, {0, 2, 1});  // (B, D, T') for the depthwise pass over time
  h = swish(blk.conv_bn.forward(blk.conv_dw.forward(h), mode));
  h = permute(h, {0, 2, 1});
  return rowwise(blk.conv_pw2, h);
}

template <typename T>
Tensor<T> ConformerAsr<T>::self_attention(size_t idx, const Tensor<T>& x,
                                          const std::vector<Index>& lengths) const {
  if (idx >= blocks_.size()) throw ConfigError(str_cat("conformer: no block ", idx));
  const Block& blk = blocks_[idx];
  if (x.ndim() != 3 || x.dim(2) != cfg_.d_model) {
    throw ShapeError(str_cat("conformer: attention input ", shape_str(x.shape())));
  }
  const Index b = x.dim(0), t = x.dim(1), d = cfg_.d_model;
  const Index dh = d / cfg_.heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  if (!lengths.empty() && static_cast<Index>(lengths.size()) != b) {
    throw ShapeError("conformer: one length per utterance required");
  }

  std::vector<Tensor<T>> out_rows;
  out_rows.reserve(static_cast<size_t>(b));
  for (Index bi = 0; bi < b; ++bi) {
    Tensor<T> xb = reshape(slice(x, 0, bi, 1), {t, d});
    Tensor<T> qm = blk.wq.forward(xb);
    Tensor<T> km = blk.wk.forward(xb);
    Tensor<T> vm = blk.wv.forward(xb);
    Index valid = lengths.empty() ? t : lengths[static_cast<size_t>(bi)];
    std::vector<Tensor<T>> ctx;
    ctx.reserve(static_cast<size_t>(cfg_.heads));
    for (Index h = 0; h < cfg_.heads; ++h) {
      Tensor<T> qh = slice(qm, 1, h * dh, dh);
      Tensor<T> kh = slice(km, 1, h * dh, dh);
      Tensor<T> vh = slice(vm, 1, h * dh, dh);
      Tensor<T> scores = mul_scalar(matmul(qh, kh, false, true), scale);
      if (valid < t) scores = add(scores, key_mask<T>(t, valid));
      ctx.push_back(matmul(softmax_lastdim(scores), vh));
    }
    out_rows.push_back(reshape(blk.wo.forward(concat<T>(ctx, 1)), {1, t, d}));
  }
  return concat<T>(out_rows, 0);
}

template <typename T>
Tensor<T> ConformerAsr<T>::block_forward(size_t idx, const Tensor<T>& x,
                                         const std::vector<Index>& lengths, BnMode mode,
                                         Rng* dropout_rng) const {
  if (idx >= blocks_.size()) throw ConfigError(str_cat("conformer: no block ", idx));
  const Block& blk = blocks_[idx];
  Tensor<T> x1 = add(x, mul_scalar(feed_forward(blk.ffn1_in, blk.ffn1_out, x, mode, dropout_rng),
                                   static_cast<T>(0.5)));
  Tensor<T> x2 = add(x1, self_attention(idx, x1, lengths));
  Tensor<T> x3 = add(x2, conv_module(blk, x2, mode));
  Tensor<T> x4 = add(x3, mul_scalar(feed_forward(blk.ffn2_in, blk.ffn2_out, x3, mode, dropout_rng),
                                    static_cast<T>(0.5)));
  return blk.ln.forward(x4);
}

template <typename T>
Tensor<T> ConformerAsr<T>::subsample(const Tensor<T>& x, BnMode mode, Rng* dropout_rng) const {
  if (x.ndim() != 3) {
    throw ShapeError(str_cat("conformer: expected (batch, time, bins), got ",
                             shape_str(x.shape())));
  }
  if (x.dim(2) != cfg_.q) {
    throw ShapeError(str_cat("conformer: input has ", x.dim(2), " bins, config says ", cfg_.q));
  }
  const Index b = x.dim(0);
  const Index t = x.dim(1);
  if (t < ConformerConfig::kMinFrames) {
    throw ShapeError(str_cat("conformer: two stride-2 convolutions need at least ",
                             ConformerConfig::kMinFrames, " frames, got ", t));
  }

  Tensor<T> h = input_bn_->forward(x, mode);
  h = reshape(h, {b, 1, t, cfg_.q});
  h = swish(sub_conv0_->forward(h));
  h = swish(sub_conv1_->forward(h));  // (B, D, T', Q'')

  const Index tp = h.dim(2);
  const Index qp = h.dim(3);
  h = reshape(permute(h, {0, 2, 1, 3}), {b * tp, cfg_.d_model * qp});
  h = reshape(sub_proj_->forward(h), {b, tp, cfg_.d_model});
  if (mode == BnMode::kTrain && dropout_rng != nullptr && cfg_.dropout > 0.0) {
    h = dropout(h, static_cast<T>(cfg_.dropout), true, *dropout_rng);
  }
  return h;
}

template <typename T>
AsrOutput<T> ConformerAsr<T>::forward(const Tensor<T>& x, const std::vector<Index>& lengths,
                                      BnMode mode, Rng* dropout_rng) const {
  const Index b = x.ndim() == 3 ? x.dim(0) : 0;
  const Index t = x.ndim() == 3 ? x.dim(1) : 0;
  std::vector<Index> lens = lengths;
  if (lens.empty()) lens.assign(static_cast<size_t>(b), t);
  if (static_cast<Index>(lens.size()) != b) {
    throw ShapeError("conformer: one length per utterance required");
  }
  for (Index l : lens) {
    if (l < 1 || l > t) throw ShapeError(str_cat("conformer: bad utterance length ", l));
  }

  Tensor<T> h = subsample(x, mode, dropout_rng);
  const Index tp = h.dim(1);
  h = add(h, positional_encoding(b, tp));

  std::vector<Index> sub_lens(lens.size());
  for (size_t i = 0; i < lens.size(); ++i) sub_lens[i] = cfg_.subsampled_len(lens[i]);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    h = block_forward(i, h, sub_lens, mode, dropout_rng);
  }

  AsrOutput<T> out;
  out.encoded = h;
  out.logits = rowwise(*ctc_head_, h);
  out.out_lengths = std::move(sub_lens);
  return out;
}

template class ConformerAsr<float>;
template class ConformerAsr<double>;

}  // namespace mcgasr
