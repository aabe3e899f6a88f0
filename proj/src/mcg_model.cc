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

#include "mcgasr/mcg_model.h"

#include <string>
#include <utility>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

McgConfig McgConfig::full(Index num_gates) {
  McgConfig cfg;
  cfg.num_gates = num_gates;
  return cfg;
}

McgConfig McgConfig::small(Index num_gates) {
  McgConfig cfg;
  cfg.q = 40;
  cfg.num_gates = num_gates;
  cfg.encoder_channels = {8, 12, 16, 24, 32};
  cfg.freq_strides = {1, 1, 2, 2, 1};
  cfg.lstm_units = 32;
  return cfg;
}

Index McgConfig::total_freq_stride() const {
  Index total = 1;
  for (Index s : freq_strides) total *= s;
  return total;
}

void McgConfig::validate() const {
  if (encoder_channels.empty()) throw ConfigError("mcg: encoder_channels is empty");
  if (encoder_channels.size() != freq_strides.size()) {
    throw ConfigError(str_cat("mcg: ", encoder_channels.size(), " encoder channels but ",
                              freq_strides.size(), " strides"));
  }
  for (Index c : encoder_channels) {
    if (c < 1) throw ConfigError("mcg: encoder channel count must be positive");
  }
  for (Index s : freq_strides) {
    if (s < 1) throw ConfigError("mcg: stride must be positive");
  }
  if (num_gates < 1) throw ConfigError("mcg: num_gates must be at least 1");
  if (head_channels < 1) throw ConfigError("mcg: head_channels must be at least 1");
  if (lstm_units < 1) throw ConfigError("mcg: lstm_units must be at least 1");
  Index total = total_freq_stride();
  if (q < total || q % total != 0) {
    throw ConfigError(str_cat("mcg: q=", q, " is not divisible by the total frequency stride ",
                              total));
  }
  // Each stride-2 stage must see an even width so the mirrored transposed
  // convolution restores it exactly.
  Index width = q;
  for (Index s : freq_strides) {
    if (s > 1 && width % s != 0) {
      throw ConfigError(str_cat("mcg: intermediate width ", width, " not divisible by stride ", s));
    }
    width /= s;
  }
}

template <typename T>
std::vector<Tensor<T>> apply_gates(const std::vector<Tensor<T>>& gates, const Tensor<T>& x) {
  std::vector<Tensor<T>> out;
  out.reserve(gates.size());
  for (const auto& g : gates) out.push_back(mul(g, x));
  return out;
}

template <typename T>
McgModel<T>::McgModel(const McgConfig& cfg, Rng& rng, ParamMap<T>& params,
                      const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  const auto& ch = cfg_.encoder_channels;
  const size_t levels = ch.size();

  Index in_ch = 1;
  for (size_t i = 0; i < levels; ++i) {
    Conv2dSpec spec;
    spec.stride_t = 1;
    spec.stride_f = cfg_.freq_strides[i];
    spec.pad_t = 1;
    spec.pad_f = 1;
    std::string base = str_cat(prefix, "enc", i);
    enc_.push_back(EncBlock{Conv2d<T>(base + ".conv", in_ch, ch[i], 3, 3, spec, rng, params),
                            BatchNorm<T>(base + ".bn", ch[i], 1, params),
                            PRelu<T>(base + ".act", ch[i], 1, params)});
    in_ch = ch[i];
  }

  lstm_.emplace(prefix + "lstm", cfg_.flat_width(), cfg_.lstm_units, rng, params);
  fc_.emplace(prefix + "fc", cfg_.lstm_units, cfg_.flat_width(), rng, params);

  // Decoder stage i consumes the previous stage's output concatenated with
  // the skip from encoder stage levels-1-i, and mirrors that stage's stride.
  Index prev_out = ch.back();
  for (size_t i = 0; i < levels; ++i) {
    size_t mirror = levels - 1 - i;
    Index skip_ch = ch[mirror];
    Index dec_in = prev_out + skip_ch;
    Index dec_out = (i + 1 < levels) ? ch[mirror - 1] : cfg_.head_channels * cfg_.num_gates;
    ConvTranspose2dSpec spec;
    spec.stride_t = 1;
    spec.stride_f = cfg_.freq_strides[mirror];
    spec.pad_t = 1;
    spec.pad_f = 1;
    spec.out_pad_t = 0;
    spec.out_pad_f = spec.stride_f - 1;
    std::string base = str_cat(prefix, "dec", i);
    dec_.push_back(
        DecBlock{ConvTranspose2d<T>(base + ".conv", dec_in, dec_out, 3, 3, spec, rng, params),
                 BatchNorm<T>(base + ".bn", dec_out, 1, params),
                 PRelu<T>(base + ".act", dec_out, 1, params)});
    dec_in_channels_.push_back(dec_in);
    prev_out = dec_out;
  }
  if (prev_out != cfg_.head_channels * cfg_.num_gates) {
    throw Error(str_cat("mcg: last decoder emits ", prev_out, " channels, expected ",
                        cfg_.head_channels * cfg_.num_gates));
  }

  Conv2dSpec one;
  one.stride_t = 1;
  one.stride_f = 1;
  one.pad_t = 0;
  one.pad_f = 0;
  for (Index i = 0; i < cfg_.num_gates; ++i) {
    heads_.emplace_back(str_cat(prefix, "head", i), cfg_.head_channels, 1, 1, 1, one, rng,
                        params);
  }

  Conv2dSpec fuse;
  fuse.stride_t = 1;
  fuse.stride_f = 1;
  fuse.pad_t = 1;
  fuse.pad_f = 1;
  fuse_conv_.emplace(prefix + "fuse.conv", cfg_.num_gates, 1, 3, 3, fuse, rng, params);
  fuse_bn_.emplace(prefix + "fuse.bn", 1, 1, params);
  fuse_act_.emplace(prefix + "fuse.act", 1, 1, params);
}

template <typename T>
McgOutput<T> McgModel<T>::forward(const Tensor<T>& x, BnMode mode) const {
  if (x.ndim() != 3) {
    throw ShapeError(str_cat("mcg: expected (batch, time, bins), got ", shape_str(x.shape())));
  }
  if (x.dim(2) != cfg_.q) {
    throw ShapeError(str_cat("mcg: input has ", x.dim(2), " bins, config says ", cfg_.q));
  }
  const Index b = x.dim(0);
  const Index t = x.dim(1);

  Tensor<T> h = reshape(x, {b, 1, t, cfg_.q});
  std::vector<Tensor<T>> skips;
  skips.reserve(enc_.size());
  for (const auto& blk : enc_) {
    h = blk.act.forward(blk.bn.forward(blk.conv.forward(h), mode));
    skips.push_back(h);
  }

  // (B, C, T, Q') -> (B, T, C*Q') so the LSTM walks the time axis.
  const Index deep_c = cfg_.encoder_channels.back();
  const Index deep_q = cfg_.deepest_q();
  Tensor<T> seq = reshape(permute(h, {0, 2, 1, 3}), {b, t, deep_c * deep_q});
  Tensor<T> mem = lstm_->forward(seq);
  Tensor<T> bridged = reshape(fc_->forward(reshape(mem, {b * t, cfg_.lstm_units})),
                              {b, t, deep_c, deep_q});
  h = permute(bridged, {0, 2, 1, 3});

  for (size_t i = 0; i < dec_.size(); ++i) {
    Tensor<T> joined = concat<T>({h, skips[dec_.size() - 1 - i]}, 1);
    if (joined.dim(1) != dec_in_channels_[i]) {
      throw ShapeError(str_cat("mcg: decoder ", i, " got ", joined.dim(1), " channels, expected ",
                               dec_in_channels_[i]));
    }
    const auto& blk = dec_[i];
    h = blk.act.forward(blk.bn.forward(blk.conv.forward(joined), mode));
  }

  McgOutput<T> out;
  out.gates.reserve(heads_.size());
  for (size_t i = 0; i < heads_.size(); ++i) {
    Tensor<T> part = slice(h, 1, static_cast<Index>(i) * cfg_.head_channels, cfg_.head_channels);
    Tensor<T> logit = heads_[i].forward(part);  // (B, 1, T, Q)
    out.gates.push_back(reshape(sigmoid(logit), {b, t, cfg_.q}));
  }
  out.gated = apply_gates(out.gates, x);

  std::vector<Tensor<T>> stacked;
  stacked.reserve(out.gated.size());
  for (const auto& r : out.gated) stacked.push_back(reshape(r, {b, 1, t, cfg_.q}));
  Tensor<T> fused = fuse_act_->forward(
      fuse_bn_->forward(fuse_conv_->forward(concat<T>(stacked, 1)), mode));
  out.fused = reshape(fused, {b, t, cfg_.q});
  return out;
}

template std::vector<Tensor<float>> apply_gates<float>(const std::vector<Tensor<float>>&,
                                                       const Tensor<float>&);
template std::vector<Tensor<double>> apply_gates<double>(const std::vector<Tensor<double>>&,
                                                         const Tensor<double>&);
template class McgModel<float>;
template class McgModel<double>;

}  // namespace mcgasr
