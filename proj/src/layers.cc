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

#include "mcgasr/layers.h"

#include <cmath>

namespace mcgasr {

template <typename T>
void ParamMap<T>::add(const std::string& name, Tensor<T> t) {
  if (contains(name)) throw ConfigError(str_cat("params: duplicate name '", name, "'"));
  items_.emplace_back(name, std::move(t));
}

template <typename T>
Tensor<T>& ParamMap<T>::get(const std::string& name) {
  for (auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ConfigError(str_cat("params: unknown name '", name, "'"));
}

template <typename T>
const Tensor<T>& ParamMap<T>::get(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ConfigError(str_cat("params: unknown name '", name, "'"));
}

template <typename T>
bool ParamMap<T>::contains(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return true;
  }
  return false;
}

template <typename T>
Index ParamMap<T>::num_elements(bool trainable_only) const {
  Index total = 0;
  for (const auto& [n, t] : items_) {
    if (!trainable_only || t.requires_grad()) total += t.size();
  }
  return total;
}

template <typename T>
void ParamMap<T>::save_into(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& [n, t] : items_) ck.put_tensor(prefix + n, t.shape(), t.values());
}

template <typename T>
void ParamMap<T>::load_from(const Checkpoint& ck, const std::string& prefix) {
  for (auto& [n, t] : items_) {
    auto data = ck.get_tensor<T>(prefix + n, t.shape());
    std::copy(data.begin(), data.end(), t.data());
  }
}

template <typename T>
Tensor<T> uniform_param(Shape shape, Index fan_in, Rng& rng) {
  if (fan_in <= 0) throw ConfigError("uniform_param: fan_in must be positive");
  T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  return Tensor<T>::uniform(std::move(shape), bound, rng, /*requires_grad=*/true);
}

// ---------------------------------------------------------------------------

template <typename T>
Linear<T>::Linear(const std::string& name, Index in, Index out, Rng& rng, ParamMap<T>& params)
    : in_(in), out_(out) {
  w_ = uniform_param<T>({out, in}, in, rng);
  b_ = Tensor<T>::zeros({out}, /*requires_grad=*/true);
  params.add(name + ".w", w_);
  params.add(name + ".b", b_);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  if (x.ndim() != 2 || x.dim(1) != in_) {
    throw ShapeError(str_cat("linear: expected (rows,", in_, "), got ", shape_str(x.shape())));
  }
  return add_bias(matmul(x, w_, false, true), b_);
}

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, Index cin, Index cout, Index kt, Index kf,
                  Conv2dSpec spec, Rng& rng, ParamMap<T>& params)
    : spec_(spec) {
  w_ = uniform_param<T>({cout, cin, kt, kf}, cin * kt * kf, rng);
  b_ = Tensor<T>::zeros({cout}, /*requires_grad=*/true);
  params.add(name + ".w", w_);
  params.add(name + ".b", b_);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  return conv2d(x, w_, b_, spec_);
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(const std::string& name, Index cin, Index cout, Index kt,
                                    Index kf, ConvTranspose2dSpec spec, Rng& rng,
                                    ParamMap<T>& params)
    : spec_(spec) {
  w_ = uniform_param<T>({cin, cout, kt, kf}, cin * kt * kf, rng);
  b_ = Tensor<T>::zeros({cout}, /*requires_grad=*/true);
  params.add(name + ".w", w_);
  params.add(name + ".b", b_);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) const {
  return conv2d_transpose(x, w_, b_, spec_);
}

template <typename T>
DepthwiseConv1d<T>::DepthwiseConv1d(const std::string& name, Index channels, Index kernel,
                                    Index pad, Rng& rng, ParamMap<T>& params)
    : pad_(pad) {
  w_ = uniform_param<T>({channels, kernel}, kernel, rng);
  b_ = Tensor<T>::zeros({channels}, /*requires_grad=*/true);
  params.add(name + ".w", w_);
  params.add(name + ".b", b_);
}

template <typename T>
Tensor<T> DepthwiseConv1d<T>::forward(const Tensor<T>& x) const {
  return depthwise_conv1d(x, w_, b_, pad_);
}

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, Index channels, int channel_axis,
                        ParamMap<T>& params)
    : channel_axis_(channel_axis) {
  gamma_ = Tensor<T>::full({channels}, T{1}, /*requires_grad=*/true);
  beta_ = Tensor<T>::zeros({channels}, /*requires_grad=*/true);
  running_mean_ = Tensor<T>::zeros({channels});
  running_var_ = Tensor<T>::full({channels}, T{1});
  params.add(name + ".gamma", gamma_);
  params.add(name + ".beta", beta_);
  params.add(name + ".running_mean", running_mean_);
  params.add(name + ".running_var", running_var_);
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, BnMode mode) const {
  return batch_norm(x, gamma_, beta_, running_mean_.impl()->value, running_var_.impl()->value,
                    channel_axis_, mode, momentum_, eps_);
}

template <typename T>
LayerNorm<T>::LayerNorm(const std::string& name, Index dim, ParamMap<T>& params) {
  gamma_ = Tensor<T>::full({dim}, T{1}, /*requires_grad=*/true);
  beta_ = Tensor<T>::zeros({dim}, /*requires_grad=*/true);
  params.add(name + ".gamma", gamma_);
  params.add(name + ".beta", beta_);
}

template <typename T>
Tensor<T> LayerNorm<T>::forward(const Tensor<T>& x) const {
  return layer_norm(x, gamma_, beta_, eps_);
}

template <typename T>
PRelu<T>::PRelu(const std::string& name, Index channels, int channel_axis, ParamMap<T>& params)
    : channel_axis_(channel_axis) {
  alpha_ = Tensor<T>::full({channels}, static_cast<T>(0.25), /*requires_grad=*/true);
  params.add(name + ".alpha", alpha_);
}

template <typename T>
Tensor<T> PRelu<T>::forward(const Tensor<T>& x) const {
  return prelu(x, alpha_, channel_axis_);
}

template <typename T>
Lstm<T>::Lstm(const std::string& name, Index input, Index hidden, Rng& rng, ParamMap<T>& params)
    : input_(input), hidden_(hidden) {
  w_ih_ = uniform_param<T>({4 * hidden, input}, hidden, rng);
  w_hh_ = uniform_param<T>({4 * hidden, hidden}, hidden, rng);
  b_ = Tensor<T>::zeros({4 * hidden}, /*requires_grad=*/true);
  params.add(name + ".w_ih", w_ih_);
  params.add(name + ".w_hh", w_hh_);
  params.add(name + ".b", b_);
}

template <typename T>
Tensor<T> Lstm<T>::forward(const Tensor<T>& x) const {
  if (x.ndim() != 3 || x.dim(2) != input_) {
    throw ShapeError(str_cat("lstm: expected (B,T,", input_, "), got ", shape_str(x.shape())));
  }
  Index B = x.dim(0);
  Index Tn = x.dim(1);
  Index H = hidden_;
  Tensor<T> h = Tensor<T>::zeros({B, H});
  Tensor<T> c = Tensor<T>::zeros({B, H});
  std::vector<Tensor<T>> steps;
  steps.reserve(static_cast<size_t>(Tn));
  for (Index t = 0; t < Tn; ++t) {
    auto xt = reshape(slice(x, 1, t, 1), {B, input_});
    auto gates = add_bias(add(matmul(xt, w_ih_, false, true), matmul(h, w_hh_, false, true)), b_);
    auto i = sigmoid(slice(gates, 1, 0, H));
    auto f = sigmoid(slice(gates, 1, H, H));
    auto g = tanh_op(slice(gates, 1, 2 * H, H));
    auto o = sigmoid(slice(gates, 1, 3 * H, H));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh_op(c));
    steps.push_back(reshape(h, {B, 1, H}));
  }
  return concat(steps, 1);
}

#define MCGASR_INSTANTIATE_LAYERS(T)          \
  template class ParamMap<T>;                 \
  template Tensor<T> uniform_param<T>(Shape, Index, Rng&); \
  template class Linear<T>;                   \
  template class Conv2d<T>;                   \
  template class ConvTranspose2d<T>;          \
  template class DepthwiseConv1d<T>;          \
  template class BatchNorm<T>;                \
  template class LayerNorm<T>;                \
  template class PRelu<T>;                    \
  template class Lstm<T>;
MCGASR_INSTANTIATE_LAYERS(float)
MCGASR_INSTANTIATE_LAYERS(double)
#undef MCGASR_INSTANTIATE_LAYERS

}  // namespace mcgasr
