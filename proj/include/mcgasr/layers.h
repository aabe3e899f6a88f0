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

#ifndef MCGASR_LAYERS_H_
#define MCGASR_LAYERS_H_

#include <string>
#include <utility>
#include <vector>

#include "mcgasr/checkpoint.h"
#include "mcgasr/tensor.h"

namespace mcgasr {

// Ordered registry of named tensors. Parameters require grad; batch-norm
// running statistics are registered as grad-free buffers. Loading writes into
// the registered tensors in place, so optimizer slots and layer handles stay
// aliased to the same storage.
template <typename T>
class ParamMap {
 public:
  void add(const std::string& name, Tensor<T> t);
  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::pair<std::string, Tensor<T>>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }

  Index num_elements(bool trainable_only = true) const;

  void save_into(Checkpoint& ck, const std::string& prefix) const;
  void load_from(const Checkpoint& ck, const std::string& prefix);

 private:
  std::vector<std::pair<std::string, Tensor<T>>> items_;
};

// Weight init is uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at
// zero. Every draw comes from the Rng handed in, so parameter values are a
// pure function of the seed and construction order.
template <typename T>
Tensor<T> uniform_param(Shape shape, Index fan_in, Rng& rng);

template <typename T>
class Linear {
 public:
  Linear(const std::string& name, Index in, Index out, Rng& rng, ParamMap<T>& params);
  // x: (rows, in) -> (rows, out)
  Tensor<T> forward(const Tensor<T>& x) const;
  Index in_features() const { return in_; }
  Index out_features() const { return out_; }

 private:
  Index in_, out_;
  Tensor<T> w_;  // (out, in)
  Tensor<T> b_;  // (out)
};

template <typename T>
class Conv2d {
 public:
  Conv2d(const std::string& name, Index cin, Index cout, Index kt, Index kf, Conv2dSpec spec,
         Rng& rng, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  Conv2dSpec spec_;
  Tensor<T> w_;  // (cout, cin, kt, kf)
  Tensor<T> b_;  // (cout)
};

template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(const std::string& name, Index cin, Index cout, Index kt, Index kf,
                  ConvTranspose2dSpec spec, Rng& rng, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  ConvTranspose2dSpec spec_;
  Tensor<T> w_;  // (cin, cout, kt, kf)
  Tensor<T> b_;  // (cout)
};

template <typename T>
class DepthwiseConv1d {
 public:
  DepthwiseConv1d(const std::string& name, Index channels, Index kernel, Index pad, Rng& rng,
                  ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  Index pad_;
  Tensor<T> w_;  // (channels, kernel)
  Tensor<T> b_;  // (channels)
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm(const std::string& name, Index channels, int channel_axis, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x, BnMode mode) const;

 private:
  int channel_axis_;
  T momentum_ = static_cast<T>(0.1);
  T eps_ = static_cast<T>(1e-5);
  Tensor<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;  // grad-free buffers
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm(const std::string& name, Index dim, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  T eps_ = static_cast<T>(1e-5);
  Tensor<T> gamma_, beta_;
};

template <typename T>
class PRelu {
 public:
  PRelu(const std::string& name, Index channels, int channel_axis, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;

 private:
  int channel_axis_;
  Tensor<T> alpha_;  // init 0.25 per channel
};

// Single-direction single-layer LSTM over (B, T, in) -> (B, T, hidden),
// zero initial state, gate order (input, forget, cell, output). Built from
// the primitive ops so its gradient needs no bespoke backward.
template <typename T>
class Lstm {
 public:
  Lstm(const std::string& name, Index input, Index hidden, Rng& rng, ParamMap<T>& params);
  Tensor<T> forward(const Tensor<T>& x) const;
  Index hidden_size() const { return hidden_; }

 private:
  Index input_, hidden_;
  Tensor<T> w_ih_;  // (4H, in)
  Tensor<T> w_hh_;  // (4H, H)
  Tensor<T> b_;     // (4H)
};

}  // namespace mcgasr

#endif  // MCGASR_LAYERS_H_
