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

#ifndef MCGASR_TENSOR_H_
#define MCGASR_TENSOR_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "mcgasr/common.h"
#include "mcgasr/rng.h"

namespace mcgasr {

// Thread-local switch for graph recording. Inside a NoGradGuard scope every
// operation produces a plain value with no parents, which is how the clean
// speech branch is severed from the parameters during joint training.
bool autograd_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

namespace detail {

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // sized iff requires_grad
  bool requires_grad = false;
  bool backward_ran = false;  // set on a node used as a backward() root
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(const TensorImpl&)> backprop;

  void accumulate(const std::vector<T>& g) {
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
};

}  // namespace detail

// Dense row-major tensor with reverse-mode autodiff. Copying a Tensor copies
// a handle to the same node; use detach()/clone() for value copies. T is
// float for training and double for verification (finite-difference checks
// are unreliable at 32-bit).
template <typename T>
class Tensor {
 public:
  using Impl = detail::TensorImpl<T>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, T fill, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T v);
  // Leaf with uniform(-bound, bound) entries drawn from rng.
  static Tensor uniform(Shape shape, T bound, Rng& rng, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  Index dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  Index size() const { return static_cast<Index>(impl_->value.size()); }

  T* data() { return impl_->value.data(); }
  const T* data() const { return impl_->value.data(); }
  const std::vector<T>& values() const { return impl_->value; }

  T& at(std::initializer_list<Index> idx);
  T at(std::initializer_list<Index> idx) const;

  bool requires_grad() const { return impl_->requires_grad; }
  bool is_leaf() const { return impl_->parents.empty() && !impl_->backprop; }
  // Leaf-only toggle; flipping grad tracking on an interior node would
  // silently orphan part of the graph.
  void set_requires_grad(bool v);

  const std::vector<T>& grad() const;
  void zero_grad();

  // Reverse pass from a scalar root. Throws if re-run on the same root
  // without rebuilding the graph.
  void backward();

  // Value-equal tensor cut from the graph.
  Tensor detach() const;
  // Deep copy preserving requires_grad (fresh leaf).
  Tensor clone() const;

  T item() const;

  std::shared_ptr<Impl> impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<Impl> impl_;
};

namespace detail {

// Plumbing for defining operations (used by the op suite, the fused layer
// ops, and the CTC node). `backward` receives the finished output node and
// must accumulate into any requires_grad parents.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents,
                  std::function<void(const TensorImpl<T>&)> backward,
                  const char* op_name);

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op_name);

}  // namespace detail

// ---------------------------------------------------------------------------
// Differentiable primitive suite.
// Axis convention for 4-d tensors is (batch, channel, time, freq) throughout.
// ---------------------------------------------------------------------------

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> neg(const Tensor<T>& a);
template <typename T> Tensor<T> abs_op(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh_op(const Tensor<T>& a);
// x * sigmoid(x)
template <typename T> Tensor<T> swish(const Tensor<T>& a);
// Channelwise PReLU; alpha has shape [C] matching dim `channel_axis` of a.
template <typename T> Tensor<T> prelu(const Tensor<T>& a, const Tensor<T>& alpha, int channel_axis);
// Split dim `axis` in half: first ⊗ sigmoid(second).
template <typename T> Tensor<T> glu(const Tensor<T>& a, int axis);

// 2-d matrix product with optional operand transposes.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b,
                 bool trans_a = false, bool trans_b = false);
// a[..., n] + bias[n]
template <typename T> Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape new_shape);
template <typename T> Tensor<T> slice(const Tensor<T>& a, int axis, Index start, Index len);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
// Reorders axes; perm must be a permutation of 0..ndim-1. Output is contiguous.
template <typename T> Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& perm);

template <typename T> Tensor<T> sum_all(const Tensor<T>& a);
template <typename T> Tensor<T> mean_all(const Tensor<T>& a);

template <typename T> Tensor<T> softmax_lastdim(const Tensor<T>& a);
template <typename T> Tensor<T> log_softmax_lastdim(const Tensor<T>& a);

// Identity in eval mode or when p == 0; otherwise inverted dropout.
template <typename T> Tensor<T> dropout(const Tensor<T>& a, double p, bool train, Rng& rng);

template <typename T> Tensor<T> detach(const Tensor<T>& a);

struct Conv2dSpec {
  Index stride_t = 1;
  Index stride_f = 1;
  Index pad_t = 0;
  Index pad_f = 0;
};

// x: (B, Cin, T, F), w: (Cout, Cin, Kt, Kf), bias: (Cout) or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 const Conv2dSpec& spec);

struct ConvTranspose2dSpec {
  Index stride_t = 1;
  Index stride_f = 1;
  Index pad_t = 0;
  Index pad_f = 0;
  Index out_pad_t = 0;
  Index out_pad_f = 0;
};

// x: (B, Cin, T, F), w: (Cin, Cout, Kt, Kf), bias: (Cout) or undefined.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           const ConvTranspose2dSpec& spec);

// x: (B, C, T), w: (C, K), bias: (C) or undefined; stride 1, zero padding.
template <typename T>
Tensor<T> depthwise_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           Index pad);

enum class BnMode {
  kTrain,          // batch statistics, running stats updated
  kTrainNoUpdate,  // batch statistics, running stats untouched (clean branch)
  kEval,           // running statistics
};

// Fused batch normalization over the `channel_axis` dim; statistics pool all
// other axes. running_mean/running_var are plain state owned by the caller.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     std::vector<T>& running_mean, std::vector<T>& running_var,
                     int channel_axis, BnMode mode, T momentum, T eps);

// Normalizes the last dim; gamma/beta have that dim's shape.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);

// Operator sugar (same-shape elementwise).
template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }

}  // namespace mcgasr

#endif  // MCGASR_TENSOR_H_
