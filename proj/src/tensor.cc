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

#include "mcgasr/tensor.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mcgasr {

namespace {

thread_local bool g_autograd_enabled = true;

template <typename T>
bool needs_grad(std::initializer_list<Tensor<T>> ts) {
  if (!g_autograd_enabled) return false;
  for (const auto& t : ts) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

Index checked_axis(int axis, int ndim, const char* op_name) {
  if (axis < 0 || axis >= ndim) {
    throw ShapeError(str_cat(op_name, ": axis ", axis, " out of range for rank ", ndim));
  }
  return axis;
}

// Elements per step along `axis` (product of trailing dims).
Index inner_size(const Shape& shape, int axis) {
  Index inner = 1;
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
  return inner;
}

Index outer_size(const Shape& shape, int axis) {
  Index outer = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<size_t>(i)];
  return outer;
}

}  // namespace

bool autograd_enabled() { return g_autograd_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_autograd_enabled) { g_autograd_enabled = false; }
NoGradGuard::~NoGradGuard() { g_autograd_enabled = saved_; }

// ---------------------------------------------------------------------------
// Tensor members
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return from_data(std::move(shape), {}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::ones(Shape shape) {
  return full(std::move(shape), T{1});
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill, bool requires_grad) {
  Index n = numel(shape);
  return from_data(std::move(shape), std::vector<T>(static_cast<size_t>(n), fill), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  Index n = numel(shape);
  if (n < 0) throw ShapeError(str_cat("tensor: negative extent in shape ", shape_str(shape)));
  if (data.empty()) {
    data.assign(static_cast<size_t>(n), T{0});
  } else if (static_cast<Index>(data.size()) != n) {
    throw ShapeError(str_cat("tensor: data size ", data.size(), " does not match shape ",
                             shape_str(shape)));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->value = std::move(data);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->value.size(), T{0});
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v) {
  return from_data({1}, {v});
}

template <typename T>
Tensor<T> Tensor<T>::uniform(Shape shape, T bound, Rng& rng, bool requires_grad) {
  Index n = numel(shape);
  std::vector<T> data(static_cast<size_t>(n));
  for (auto& v : data) v = static_cast<T>(rng.uniform(-static_cast<double>(bound), static_cast<double>(bound)));
  return from_data(std::move(shape), std::move(data), requires_grad);
}

namespace {

Index flat_index(const Shape& s, std::initializer_list<Index> idx) {
  if (idx.size() != s.size()) {
    throw ShapeError(str_cat("at: ", idx.size(), " indices for rank ", s.size()));
  }
  Index flat = 0;
  size_t k = 0;
  for (Index i : idx) {
    if (i < 0 || i >= s[k]) throw ShapeError(str_cat("at: index ", i, " out of bounds for dim ", k));
    flat = flat * s[k] + i;
    ++k;
  }
  return flat;
}

}  // namespace

template <typename T>
T& Tensor<T>::at(std::initializer_list<Index> idx) {
  return impl_->value[static_cast<size_t>(flat_index(impl_->shape, idx))];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<Index> idx) const {
  return impl_->value[static_cast<size_t>(flat_index(impl_->shape, idx))];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool v) {
  if (!is_leaf()) throw Error("set_requires_grad: only valid on leaf tensors");
  impl_->requires_grad = v;
  if (v) {
    impl_->grad.assign(impl_->value.size(), T{0});
  } else {
    impl_->grad.clear();
  }
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
  if (!impl_->requires_grad) throw Error("grad: tensor does not require grad");
  return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
  impl_->backward_ran = false;
}

template <typename T>
void Tensor<T>::backward() {
  if (!impl_->requires_grad) throw Error("backward: root does not require grad");
  if (size() != 1) throw Error(str_cat("backward: root must be scalar, got ", shape_str(shape())));
  if (impl_->backward_ran) {
    throw Error("backward: already ran on this root; rebuild the graph or zero_grad first");
  }
  impl_->backward_ran = true;

  // Iterative post-order DFS; LSTM graphs get deep enough that recursion is
  // not safe.
  std::vector<Impl*> order;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Impl* child = node->parents[next_child].get();
      ++next_child;
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  impl_->grad[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_data(impl_->shape, impl_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from_data(impl_->shape, impl_->value, impl_->requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw Error(str_cat("item: tensor has ", size(), " elements"));
  return impl_->value[0];
}

// ---------------------------------------------------------------------------
// Op plumbing
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                  std::function<void(const TensorImpl<T>&)> backward, const char* op_name) {
  if (static_cast<Index>(value.size()) != numel(shape)) {
    throw ShapeError(str_cat(op_name, ": internal value/shape mismatch"));
  }
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  if (backward) {
    impl->requires_grad = true;
    impl->grad.assign(impl->value.size(), T{0});
    impl->parents.reserve(parents.size());
    for (auto& p : parents) impl->parents.push_back(p.impl());
    impl->backprop = std::move(backward);
  }
  return Tensor<T>(std::move(impl));
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op_name) {
  if (a.shape() != b.shape()) {
    throw ShapeError(str_cat(op_name, ": shape mismatch ", shape_str(a.shape()), " vs ",
                             shape_str(b.shape())));
  }
}

}  // namespace detail

using detail::check_same_shape;
using detail::make_op;

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  const T* pb = b.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, b})) {
    auto ia = a.impl();
    auto ib = b.impl();
    bp = [ia, ib](const detail::TensorImpl<T>& o) {
      if (ia->requires_grad) ia->accumulate(o.grad);
      if (ib->requires_grad) ib->accumulate(o.grad);
    };
  }
  return make_op(a.shape(), std::move(out), {a, b}, std::move(bp), "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  const T* pb = b.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] - pb[i];
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, b})) {
    auto ia = a.impl();
    auto ib = b.impl();
    bp = [ia, ib](const detail::TensorImpl<T>& o) {
      if (ia->requires_grad) ia->accumulate(o.grad);
      if (ib->requires_grad) {
        for (size_t i = 0; i < o.grad.size(); ++i) ib->grad[i] -= o.grad[i];
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a, b}, std::move(bp), "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  const T* pb = b.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, b})) {
    auto ia = a.impl();
    auto ib = b.impl();
    bp = [ia, ib](const detail::TensorImpl<T>& o) {
      if (ia->requires_grad) {
        for (size_t i = 0; i < o.grad.size(); ++i) ia->grad[i] += o.grad[i] * ib->value[i];
      }
      if (ib->requires_grad) {
        for (size_t i = 0; i < o.grad.size(); ++i) ib->grad[i] += o.grad[i] * ia->value[i];
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a, b}, std::move(bp), "mul");
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] + s;
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) { ia->accumulate(o.grad); };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "add_scalar");
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] * s;
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, s](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) ia->grad[i] += o.grad[i] * s;
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "mul_scalar");
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return mul_scalar(a, T{-1});
}

template <typename T>
Tensor<T> abs_op(const Tensor<T>& a) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = std::abs(pa[i]);
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    // subgradient 0 at the kink
    bp = [ia](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) {
        T x = ia->value[i];
        ia->grad[i] += o.grad[i] * (x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}));
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "abs");
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = T{1} / (T{1} + std::exp(-pa[i]));
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) {
        T y = o.value[i];
        ia->grad[i] += o.grad[i] * y * (T{1} - y);
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "sigmoid");
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = std::tanh(pa[i]);
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) {
        T y = o.value[i];
        ia->grad[i] += o.grad[i] * (T{1} - y * y);
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "tanh");
}

template <typename T>
Tensor<T> swish(const Tensor<T>& a) {
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = pa[i] / (T{1} + std::exp(-pa[i]));
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) {
        T x = ia->value[i];
        T s = T{1} / (T{1} + std::exp(-x));
        ia->grad[i] += o.grad[i] * s * (T{1} + x * (T{1} - s));
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "swish");
}

template <typename T>
Tensor<T> prelu(const Tensor<T>& a, const Tensor<T>& alpha, int channel_axis) {
  checked_axis(channel_axis, a.ndim(), "prelu");
  Index channels = a.dim(channel_axis);
  if (alpha.ndim() != 1 || alpha.dim(0) != channels) {
    throw ShapeError(str_cat("prelu: alpha shape ", shape_str(alpha.shape()),
                             " does not match channel dim ", channels));
  }
  Index inner = inner_size(a.shape(), channel_axis);
  size_t n = static_cast<size_t>(a.size());
  std::vector<T> out(n);
  const T* pa = a.data();
  const T* pal = alpha.data();
  for (size_t i = 0; i < n; ++i) {
    Index c = (static_cast<Index>(i) / inner) % channels;
    T x = pa[i];
    out[i] = x >= T{0} ? x : pal[static_cast<size_t>(c)] * x;
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, alpha})) {
    auto ia = a.impl();
    auto ial = alpha.impl();
    bp = [ia, ial, inner, channels](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) {
        Index c = (static_cast<Index>(i) / inner) % channels;
        T x = ia->value[i];
        if (x >= T{0}) {
          if (ia->requires_grad) ia->grad[i] += o.grad[i];
        } else {
          if (ia->requires_grad) ia->grad[i] += o.grad[i] * ial->value[static_cast<size_t>(c)];
          if (ial->requires_grad) ial->grad[static_cast<size_t>(c)] += o.grad[i] * x;
        }
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a, alpha}, std::move(bp), "prelu");
}

template <typename T>
Tensor<T> glu(const Tensor<T>& a, int axis) {
  checked_axis(axis, a.ndim(), "glu");
  Index d = a.dim(axis);
  if (d % 2 != 0) throw ShapeError(str_cat("glu: dim ", axis, " has odd extent ", d));
  Index half = d / 2;
  Index inner = inner_size(a.shape(), axis);
  Index outer = outer_size(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = half;
  std::vector<T> out(static_cast<size_t>(outer * half * inner));
  const T* pa = a.data();
  for (Index o = 0; o < outer; ++o) {
    const T* first = pa + o * d * inner;
    const T* second = first + half * inner;
    T* po = out.data() + o * half * inner;
    for (Index i = 0; i < half * inner; ++i) {
      po[i] = first[i] / (T{1} + std::exp(-second[i]));
    }
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, outer, half, inner, d](const detail::TensorImpl<T>& o) {
      for (Index ot = 0; ot < outer; ++ot) {
        const T* first = ia->value.data() + ot * d * inner;
        const T* second = first + half * inner;
        T* gfirst = ia->grad.data() + ot * d * inner;
        T* gsecond = gfirst + half * inner;
        const T* go = o.grad.data() + ot * half * inner;
        for (Index i = 0; i < half * inner; ++i) {
          T s = T{1} / (T{1} + std::exp(-second[i]));
          gfirst[i] += go[i] * s;
          gsecond[i] += go[i] * first[i] * s * (T{1} - s);
        }
      }
    };
  }
  return make_op(std::move(out_shape), std::move(out), {a}, std::move(bp), "glu");
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

namespace {

// C(m x n) += op(A) * op(B); A is (ar x ac), B is (br x bc).
template <typename T>
void gemm_acc(const T* a, Index ar, Index ac, bool ta, const T* b, Index br, Index bc, bool tb,
              T* c) {
  Index m = ta ? ac : ar;
  Index k = ta ? ar : ac;
  Index n = tb ? br : bc;
  if (!ta && !tb) {
    for (Index i = 0; i < m; ++i) {
      const T* arow = a + i * ac;
      T* crow = c + i * n;
      for (Index p = 0; p < k; ++p) {
        T av = arow[p];
        if (av == T{0}) continue;
        const T* brow = b + p * bc;
        for (Index j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (Index i = 0; i < m; ++i) {
      const T* arow = a + i * ac;
      T* crow = c + i * n;
      for (Index j = 0; j < n; ++j) {
        const T* brow = b + j * bc;
        T acc{0};
        for (Index p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] += acc;
      }
    }
  } else if (ta && !tb) {
    for (Index p = 0; p < k; ++p) {
      const T* arow = a + p * ac;
      const T* brow = b + p * bc;
      for (Index i = 0; i < m; ++i) {
        T av = arow[i];
        if (av == T{0}) continue;
        T* crow = c + i * n;
        for (Index j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (Index i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (Index j = 0; j < n; ++j) {
        const T* brow = b + j * bc;
        T acc{0};
        for (Index p = 0; p < k; ++p) acc += a[p * ac + i] * brow[p];
        crow[j] += acc;
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b) {
  if (a.ndim() != 2 || b.ndim() != 2) {
    throw ShapeError(str_cat("matmul: expects rank-2 operands, got ", shape_str(a.shape()),
                             " and ", shape_str(b.shape())));
  }
  Index m = trans_a ? a.dim(1) : a.dim(0);
  Index ka = trans_a ? a.dim(0) : a.dim(1);
  Index kb = trans_b ? b.dim(1) : b.dim(0);
  Index n = trans_b ? b.dim(0) : b.dim(1);
  if (ka != kb) {
    throw ShapeError(str_cat("matmul: inner dims disagree, ", shape_str(a.shape()),
                             (trans_a ? "^T" : ""), " x ", shape_str(b.shape()),
                             (trans_b ? "^T" : "")));
  }
  std::vector<T> out(static_cast<size_t>(m * n), T{0});
  gemm_acc(a.data(), a.dim(0), a.dim(1), trans_a, b.data(), b.dim(0), b.dim(1), trans_b,
           out.data());
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, b})) {
    auto ia = a.impl();
    auto ib = b.impl();
    Index ar = a.dim(0), ac = a.dim(1), br = b.dim(0), bc = b.dim(1);
    bp = [ia, ib, trans_a, trans_b, m, n, ar, ac, br, bc](const detail::TensorImpl<T>& o) {
      const T* g = o.grad.data();
      if (ia->requires_grad) {
        if (!trans_a) {
          // gA = G * Beff^T
          gemm_acc(g, m, n, false, ib->value.data(), br, bc, !trans_b, ia->grad.data());
        } else {
          // gA_stored = Beff * G^T
          gemm_acc(ib->value.data(), br, bc, trans_b, g, m, n, true, ia->grad.data());
        }
      }
      if (ib->requires_grad) {
        if (!trans_b) {
          // gB = Aeff^T * G
          gemm_acc(ia->value.data(), ar, ac, !trans_a, g, m, n, false, ib->grad.data());
        } else {
          // gB_stored = G^T * Aeff
          gemm_acc(g, m, n, true, ia->value.data(), ar, ac, trans_a, ib->grad.data());
        }
      }
    };
  }
  return make_op({m, n}, std::move(out), {a, b}, std::move(bp), "matmul");
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  if (bias.ndim() != 1) throw ShapeError("add_bias: bias must be rank 1");
  Index n = bias.dim(0);
  if (a.ndim() < 1 || a.dim(a.ndim() - 1) != n) {
    throw ShapeError(str_cat("add_bias: last dim of ", shape_str(a.shape()),
                             " does not match bias ", shape_str(bias.shape())));
  }
  Index rows = a.size() / n;
  std::vector<T> out(static_cast<size_t>(a.size()));
  const T* pa = a.data();
  const T* pb = bias.data();
  for (Index r = 0; r < rows; ++r) {
    for (Index j = 0; j < n; ++j) out[static_cast<size_t>(r * n + j)] = pa[r * n + j] + pb[j];
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a, bias})) {
    auto ia = a.impl();
    auto ib = bias.impl();
    bp = [ia, ib, rows, n](const detail::TensorImpl<T>& o) {
      if (ia->requires_grad) ia->accumulate(o.grad);
      if (ib->requires_grad) {
        for (Index r = 0; r < rows; ++r) {
          for (Index j = 0; j < n; ++j) {
            ib->grad[static_cast<size_t>(j)] += o.grad[static_cast<size_t>(r * n + j)];
          }
        }
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a, bias}, std::move(bp), "add_bias");
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (numel(new_shape) != a.size()) {
    throw ShapeError(str_cat("reshape: cannot view ", shape_str(a.shape()), " as ",
                             shape_str(new_shape)));
  }
  std::vector<T> out(a.values());
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) { ia->accumulate(o.grad); };
  }
  return make_op(std::move(new_shape), std::move(out), {a}, std::move(bp), "reshape");
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, int axis, Index start, Index len) {
  checked_axis(axis, a.ndim(), "slice");
  Index d = a.dim(axis);
  if (start < 0 || len < 0 || start + len > d) {
    throw ShapeError(str_cat("slice: range [", start, ",", start + len, ") exceeds dim ", d));
  }
  Index inner = inner_size(a.shape(), axis);
  Index outer = outer_size(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = len;
  std::vector<T> out(static_cast<size_t>(outer * len * inner));
  const T* pa = a.data();
  for (Index o = 0; o < outer; ++o) {
    std::copy_n(pa + (o * d + start) * inner, len * inner, out.data() + o * len * inner);
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, outer, inner, d, start, len](const detail::TensorImpl<T>& o) {
      for (Index ot = 0; ot < outer; ++ot) {
        const T* go = o.grad.data() + ot * len * inner;
        T* ga = ia->grad.data() + (ot * d + start) * inner;
        for (Index i = 0; i < len * inner; ++i) ga[i] += go[i];
      }
    };
  }
  return make_op(std::move(out_shape), std::move(out), {a}, std::move(bp), "slice");
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  int nd = parts[0].ndim();
  checked_axis(axis, nd, "concat");
  Index total = 0;
  for (const auto& p : parts) {
    if (p.ndim() != nd) throw ShapeError("concat: rank mismatch");
    for (int i = 0; i < nd; ++i) {
      if (i != axis && p.dim(i) != parts[0].dim(i)) {
        throw ShapeError(str_cat("concat: shape mismatch ", shape_str(p.shape()), " vs ",
                                 shape_str(parts[0].shape()), " on axis ", i));
      }
    }
    total += p.dim(axis);
  }
  Shape out_shape = parts[0].shape();
  out_shape[static_cast<size_t>(axis)] = total;
  Index inner = inner_size(out_shape, axis);
  Index outer = outer_size(out_shape, axis);
  std::vector<T> out(static_cast<size_t>(outer * total * inner));
  Index offset = 0;
  for (const auto& p : parts) {
    Index d = p.dim(axis);
    const T* pp = p.data();
    for (Index o = 0; o < outer; ++o) {
      std::copy_n(pp + o * d * inner, d * inner, out.data() + (o * total + offset) * inner);
    }
    offset += d;
  }
  bool ng = false;
  for (const auto& p : parts) ng = ng || needs_grad<T>({p});
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (ng) {
    std::vector<std::shared_ptr<detail::TensorImpl<T>>> impls;
    std::vector<Index> dims;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      dims.push_back(p.dim(axis));
    }
    bp = [impls, dims, outer, inner, total](const detail::TensorImpl<T>& o) {
      Index off = 0;
      for (size_t k = 0; k < impls.size(); ++k) {
        Index d = dims[k];
        if (impls[k]->requires_grad) {
          for (Index ot = 0; ot < outer; ++ot) {
            const T* go = o.grad.data() + (ot * total + off) * inner;
            T* gp = impls[k]->grad.data() + ot * d * inner;
            for (Index i = 0; i < d * inner; ++i) gp[i] += go[i];
          }
        }
        off += d;
      }
    };
  }
  return make_op(std::move(out_shape), std::move(out), parts, std::move(bp), "concat");
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& perm) {
  const int nd = a.ndim();
  if (static_cast<int>(perm.size()) != nd) {
    throw ShapeError(str_cat("permute: perm has ", perm.size(), " entries for rank ", nd));
  }
  std::vector<char> seen(static_cast<size_t>(nd), 0);
  for (int p : perm) {
    if (p < 0 || p >= nd || seen[static_cast<size_t>(p)]) {
      throw ShapeError("permute: perm is not a permutation of the axes");
    }
    seen[static_cast<size_t>(p)] = 1;
  }
  Shape out_shape(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) out_shape[static_cast<size_t>(i)] = a.dim(perm[static_cast<size_t>(i)]);
  std::vector<Index> in_stride(static_cast<size_t>(nd), 1);
  for (int i = nd - 2; i >= 0; --i) {
    in_stride[static_cast<size_t>(i)] = in_stride[static_cast<size_t>(i) + 1] * a.dim(i + 1);
  }
  // Stride in the input's flat layout for each output axis.
  std::vector<Index> map_stride(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    map_stride[static_cast<size_t>(i)] = in_stride[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }
  const Index n = a.size();
  std::vector<T> out(static_cast<size_t>(n));
  const T* pa = a.data();
  {
    std::vector<Index> coord(static_cast<size_t>(nd), 0);
    Index src = 0;
    for (Index o = 0; o < n; ++o) {
      out[static_cast<size_t>(o)] = pa[src];
      for (int ax = nd - 1; ax >= 0; --ax) {
        auto u = static_cast<size_t>(ax);
        ++coord[u];
        src += map_stride[u];
        if (coord[u] < out_shape[u]) break;
        src -= map_stride[u] * out_shape[u];
        coord[u] = 0;
      }
    }
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    Shape oshape = out_shape;
    bp = [ia, map_stride, oshape, nd](const detail::TensorImpl<T>& o) {
      const T* go = o.grad.data();
      T* ga = ia->grad.data();
      const Index total = static_cast<Index>(o.grad.size());
      std::vector<Index> coord(static_cast<size_t>(nd), 0);
      Index src = 0;
      for (Index idx = 0; idx < total; ++idx) {
        ga[src] += go[idx];
        for (int ax = nd - 1; ax >= 0; --ax) {
          auto u = static_cast<size_t>(ax);
          ++coord[u];
          src += map_stride[u];
          if (coord[u] < oshape[u]) break;
          src -= map_stride[u] * oshape[u];
          coord[u] = 0;
        }
      }
    };
  }
  return make_op(std::move(out_shape), std::move(out), {a}, std::move(bp), "permute");
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  T acc{0};
  const T* pa = a.data();
  for (Index i = 0; i < a.size(); ++i) acc += pa[i];
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia](const detail::TensorImpl<T>& o) {
      T g = o.grad[0];
      for (auto& v : ia->grad) v += g;
    };
  }
  return make_op({1}, {acc}, {a}, std::move(bp), "sum_all");
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  if (a.size() == 0) throw ShapeError("mean_all: empty tensor");
  T inv = T{1} / static_cast<T>(a.size());
  T acc{0};
  const T* pa = a.data();
  for (Index i = 0; i < a.size(); ++i) acc += pa[i];
  acc *= inv;
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, inv](const detail::TensorImpl<T>& o) {
      T g = o.grad[0] * inv;
      for (auto& v : ia->grad) v += g;
    };
  }
  return make_op({1}, {acc}, {a}, std::move(bp), "mean_all");
}

// ---------------------------------------------------------------------------
// Softmax family (last dim)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& a) {
  if (a.ndim() < 1) throw ShapeError("softmax: rank must be >= 1");
  Index n = a.dim(a.ndim() - 1);
  Index rows = a.size() / n;
  std::vector<T> out(static_cast<size_t>(a.size()));
  const T* pa = a.data();
  for (Index r = 0; r < rows; ++r) {
    const T* row = pa + r * n;
    T* orow = out.data() + r * n;
    T mx = row[0];
    for (Index j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T denom{0};
    for (Index j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (Index j = 0; j < n; ++j) orow[j] /= denom;
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, rows, n](const detail::TensorImpl<T>& o) {
      for (Index r = 0; r < rows; ++r) {
        const T* y = o.value.data() + r * n;
        const T* g = o.grad.data() + r * n;
        T* ga = ia->grad.data() + r * n;
        T dot{0};
        for (Index j = 0; j < n; ++j) dot += y[j] * g[j];
        for (Index j = 0; j < n; ++j) ga[j] += y[j] * (g[j] - dot);
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "softmax");
}

template <typename T>
Tensor<T> log_softmax_lastdim(const Tensor<T>& a) {
  if (a.ndim() < 1) throw ShapeError("log_softmax: rank must be >= 1");
  Index n = a.dim(a.ndim() - 1);
  Index rows = a.size() / n;
  std::vector<T> out(static_cast<size_t>(a.size()));
  const T* pa = a.data();
  for (Index r = 0; r < rows; ++r) {
    const T* row = pa + r * n;
    T* orow = out.data() + r * n;
    T mx = row[0];
    for (Index j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T denom{0};
    for (Index j = 0; j < n; ++j) denom += std::exp(row[j] - mx);
    T lse = mx + std::log(denom);
    for (Index j = 0; j < n; ++j) orow[j] = row[j] - lse;
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, rows, n](const detail::TensorImpl<T>& o) {
      for (Index r = 0; r < rows; ++r) {
        const T* y = o.value.data() + r * n;
        const T* g = o.grad.data() + r * n;
        T* ga = ia->grad.data() + r * n;
        T gsum{0};
        for (Index j = 0; j < n; ++j) gsum += g[j];
        for (Index j = 0; j < n; ++j) ga[j] += g[j] - std::exp(y[j]) * gsum;
      }
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "log_softmax");
}

// ---------------------------------------------------------------------------
// Dropout / detach
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError(str_cat("dropout: rate ", p, " outside [0,1)"));
  if (!train || p == 0.0) return a;
  size_t n = static_cast<size_t>(a.size());
  T scale = static_cast<T>(1.0 / (1.0 - p));
  auto mask = std::make_shared<std::vector<T>>(n);
  std::vector<T> out(n);
  const T* pa = a.data();
  for (size_t i = 0; i < n; ++i) {
    (*mask)[i] = rng.uniform(0.0, 1.0) < p ? T{0} : scale;
    out[i] = pa[i] * (*mask)[i];
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({a})) {
    auto ia = a.impl();
    bp = [ia, mask](const detail::TensorImpl<T>& o) {
      for (size_t i = 0; i < o.grad.size(); ++i) ia->grad[i] += o.grad[i] * (*mask)[i];
    };
  }
  return make_op(a.shape(), std::move(out), {a}, std::move(bp), "dropout");
}

template <typename T>
Tensor<T> detach(const Tensor<T>& a) {
  return a.detach();
}

// ---------------------------------------------------------------------------
// Normalization (fused ops with analytic backward)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     std::vector<T>& running_mean, std::vector<T>& running_var,
                     int channel_axis, BnMode mode, T momentum, T eps) {
  checked_axis(channel_axis, x.ndim(), "batch_norm");
  Index channels = x.dim(channel_axis);
  if (gamma.ndim() != 1 || gamma.dim(0) != channels || beta.ndim() != 1 || beta.dim(0) != channels) {
    throw ShapeError(str_cat("batch_norm: gamma/beta must be [", channels, "]"));
  }
  if (static_cast<Index>(running_mean.size()) != channels ||
      static_cast<Index>(running_var.size()) != channels) {
    throw ShapeError("batch_norm: running stats size mismatch");
  }
  Index inner = inner_size(x.shape(), channel_axis);
  size_t n = static_cast<size_t>(x.size());
  Index per_channel = x.size() / channels;
  if (per_channel == 0) throw ShapeError("batch_norm: empty input");

  std::vector<T> mean(static_cast<size_t>(channels), T{0});
  std::vector<T> var(static_cast<size_t>(channels), T{0});
  const T* px = x.data();
  if (mode == BnMode::kEval) {
    mean.assign(running_mean.begin(), running_mean.end());
    var.assign(running_var.begin(), running_var.end());
  } else {
    for (size_t i = 0; i < n; ++i) {
      Index c = (static_cast<Index>(i) / inner) % channels;
      mean[static_cast<size_t>(c)] += px[i];
    }
    for (auto& m : mean) m /= static_cast<T>(per_channel);
    for (size_t i = 0; i < n; ++i) {
      Index c = (static_cast<Index>(i) / inner) % channels;
      T d = px[i] - mean[static_cast<size_t>(c)];
      var[static_cast<size_t>(c)] += d * d;
    }
    for (auto& v : var) v /= static_cast<T>(per_channel);
    if (mode == BnMode::kTrain) {
      for (Index c = 0; c < channels; ++c) {
        running_mean[static_cast<size_t>(c)] =
            (T{1} - momentum) * running_mean[static_cast<size_t>(c)] + momentum * mean[static_cast<size_t>(c)];
        running_var[static_cast<size_t>(c)] =
            (T{1} - momentum) * running_var[static_cast<size_t>(c)] + momentum * var[static_cast<size_t>(c)];
      }
    }
  }

  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(channels));
  for (Index c = 0; c < channels; ++c) {
    (*inv_std)[static_cast<size_t>(c)] = T{1} / std::sqrt(var[static_cast<size_t>(c)] + eps);
  }
  auto xhat = std::make_shared<std::vector<T>>(n);
  std::vector<T> out(n);
  const T* pg = gamma.data();
  const T* pb = beta.data();
  for (size_t i = 0; i < n; ++i) {
    Index c = (static_cast<Index>(i) / inner) % channels;
    (*xhat)[i] = (px[i] - mean[static_cast<size_t>(c)]) * (*inv_std)[static_cast<size_t>(c)];
    out[i] = pg[static_cast<size_t>(c)] * (*xhat)[i] + pb[static_cast<size_t>(c)];
  }

  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({x, gamma, beta})) {
    auto ix = x.impl();
    auto ig = gamma.impl();
    auto ib = beta.impl();
    bool batch_stats = mode != BnMode::kEval;
    bp = [ix, ig, ib, xhat, inv_std, inner, channels, per_channel,
          batch_stats](const detail::TensorImpl<T>& o) {
      std::vector<T> s1(static_cast<size_t>(channels), T{0});   // sum g
      std::vector<T> s2(static_cast<size_t>(channels), T{0});   // sum g*xhat
      for (size_t i = 0; i < o.grad.size(); ++i) {
        Index c = (static_cast<Index>(i) / inner) % channels;
        s1[static_cast<size_t>(c)] += o.grad[i];
        s2[static_cast<size_t>(c)] += o.grad[i] * (*xhat)[i];
      }
      if (ig->requires_grad) {
        for (Index c = 0; c < channels; ++c) ig->grad[static_cast<size_t>(c)] += s2[static_cast<size_t>(c)];
      }
      if (ib->requires_grad) {
        for (Index c = 0; c < channels; ++c) ib->grad[static_cast<size_t>(c)] += s1[static_cast<size_t>(c)];
      }
      if (ix->requires_grad) {
        T invN = T{1} / static_cast<T>(per_channel);
        for (size_t i = 0; i < o.grad.size(); ++i) {
          Index c = (static_cast<Index>(i) / inner) % channels;
          size_t cc = static_cast<size_t>(c);
          T scale = ig->value[cc] * (*inv_std)[cc];
          if (batch_stats) {
            ix->grad[i] += scale * (o.grad[i] - s1[cc] * invN - (*xhat)[i] * s2[cc] * invN);
          } else {
            ix->grad[i] += scale * o.grad[i];
          }
        }
      }
    };
  }
  return make_op(x.shape(), std::move(out), {x, gamma, beta}, std::move(bp), "batch_norm");
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.ndim() < 1) throw ShapeError("layer_norm: rank must be >= 1");
  Index n = x.dim(x.ndim() - 1);
  if (gamma.ndim() != 1 || gamma.dim(0) != n || beta.ndim() != 1 || beta.dim(0) != n) {
    throw ShapeError(str_cat("layer_norm: gamma/beta must be [", n, "]"));
  }
  Index rows = x.size() / n;
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.size()));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
  std::vector<T> out(static_cast<size_t>(x.size()));
  const T* px = x.data();
  const T* pg = gamma.data();
  const T* pb = beta.data();
  for (Index r = 0; r < rows; ++r) {
    const T* row = px + r * n;
    T m{0};
    for (Index j = 0; j < n; ++j) m += row[j];
    m /= static_cast<T>(n);
    T v{0};
    for (Index j = 0; j < n; ++j) {
      T d = row[j] - m;
      v += d * d;
    }
    v /= static_cast<T>(n);
    T is = T{1} / std::sqrt(v + eps);
    (*inv_std)[static_cast<size_t>(r)] = is;
    for (Index j = 0; j < n; ++j) {
      T xh = (row[j] - m) * is;
      (*xhat)[static_cast<size_t>(r * n + j)] = xh;
      out[static_cast<size_t>(r * n + j)] = pg[j] * xh + pb[j];
    }
  }
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (needs_grad<T>({x, gamma, beta})) {
    auto ix = x.impl();
    auto ig = gamma.impl();
    auto ib = beta.impl();
    bp = [ix, ig, ib, xhat, inv_std, rows, n](const detail::TensorImpl<T>& o) {
      for (Index r = 0; r < rows; ++r) {
        const T* g = o.grad.data() + r * n;
        const T* xh = xhat->data() + r * n;
        if (ig->requires_grad || ib->requires_grad) {
          for (Index j = 0; j < n; ++j) {
            if (ig->requires_grad) ig->grad[static_cast<size_t>(j)] += g[j] * xh[j];
            if (ib->requires_grad) ib->grad[static_cast<size_t>(j)] += g[j];
          }
        }
        if (ix->requires_grad) {
          T is = (*inv_std)[static_cast<size_t>(r)];
          T m1{0}, m2{0};
          for (Index j = 0; j < n; ++j) {
            T gx = g[j] * ig->value[static_cast<size_t>(j)];
            m1 += gx;
            m2 += gx * xh[j];
          }
          m1 /= static_cast<T>(n);
          m2 /= static_cast<T>(n);
          T* gxr = ix->grad.data() + r * n;
          for (Index j = 0; j < n; ++j) {
            T gx = g[j] * ig->value[static_cast<size_t>(j)];
            gxr[j] += is * (gx - m1 - xh[j] * m2);
          }
        }
      }
    };
  }
  return make_op(x.shape(), std::move(out), {x, gamma, beta}, std::move(bp), "layer_norm");
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template class Tensor<float>;
template class Tensor<double>;

namespace detail {
#define MCGASR_INSTANTIATE_DETAIL(T)                                                      \
  template Tensor<T> make_op<T>(Shape, std::vector<T>, std::vector<Tensor<T>>,            \
                                std::function<void(const TensorImpl<T>&)>, const char*);  \
  template void check_same_shape<T>(const Tensor<T>&, const Tensor<T>&, const char*);
MCGASR_INSTANTIATE_DETAIL(float)
MCGASR_INSTANTIATE_DETAIL(double)
#undef MCGASR_INSTANTIATE_DETAIL
}  // namespace detail

#define MCGASR_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                      \
  template Tensor<T> mul_scalar<T>(const Tensor<T>&, T);                                      \
  template Tensor<T> neg<T>(const Tensor<T>&);                                                \
  template Tensor<T> abs_op<T>(const Tensor<T>&);                                             \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                            \
  template Tensor<T> tanh_op<T>(const Tensor<T>&);                                            \
  template Tensor<T> swish<T>(const Tensor<T>&);                                              \
  template Tensor<T> prelu<T>(const Tensor<T>&, const Tensor<T>&, int);                       \
  template Tensor<T> glu<T>(const Tensor<T>&, int);                                           \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, bool, bool);               \
  template Tensor<T> add_bias<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                     \
  template Tensor<T> slice<T>(const Tensor<T>&, int, Index, Index);                           \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int);                           \
  template Tensor<T> permute<T>(const Tensor<T>&, const std::vector<int>&);                   \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                                            \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                                           \
  template Tensor<T> softmax_lastdim<T>(const Tensor<T>&);                                    \
  template Tensor<T> log_softmax_lastdim<T>(const Tensor<T>&);                                \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, Rng&);                        \
  template Tensor<T> detach<T>(const Tensor<T>&);                                             \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                   std::vector<T>&, std::vector<T>&, int, BnMode, T, T);     \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);
MCGASR_INSTANTIATE_OPS(float)
MCGASR_INSTANTIATE_OPS(double)
#undef MCGASR_INSTANTIATE_OPS

}  // namespace mcgasr
