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

#include <algorithm>
#include <cmath>

#include "mcgasr/tensor.h"

namespace mcgasr {

namespace {

template <typename T>
bool conv_needs_grad(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  if (!autograd_enabled()) return false;
  return x.requires_grad() || w.requires_grad() || (bias.defined() && bias.requires_grad());
}

Index conv_out_dim(Index in, Index k, Index stride, Index pad, const char* op_name) {
  Index out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad < k || out <= 0) {
    throw ShapeError(str_cat(op_name, ": input extent ", in, " too small for kernel ", k,
                             " pad ", pad));
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 const Conv2dSpec& spec) {
  if (x.ndim() != 4 || w.ndim() != 4) {
    throw ShapeError(str_cat("conv2d: expects x (B,C,T,F) and w (Co,Ci,Kt,Kf), got ",
                             shape_str(x.shape()), " and ", shape_str(w.shape())));
  }
  const Index B = x.dim(0), Ci = x.dim(1), Ti = x.dim(2), Fi = x.dim(3);
  const Index Co = w.dim(0), Kt = w.dim(2), Kf = w.dim(3);
  if (w.dim(1) != Ci) {
    throw ShapeError(str_cat("conv2d: channel mismatch, x has ", Ci, " w expects ", w.dim(1)));
  }
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != Co)) {
    throw ShapeError("conv2d: bias must be rank 1 of size out-channels");
  }
  if (spec.stride_t < 1 || spec.stride_f < 1 || spec.pad_t < 0 || spec.pad_f < 0) {
    throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
  }
  const Index To = conv_out_dim(Ti, Kt, spec.stride_t, spec.pad_t, "conv2d");
  const Index Fo = conv_out_dim(Fi, Kf, spec.stride_f, spec.pad_f, "conv2d");

  std::vector<T> out(static_cast<size_t>(B * Co * To * Fo), T{0});
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = bias.defined() ? bias.data() : nullptr;
  for (Index b = 0; b < B; ++b) {
    for (Index co = 0; co < Co; ++co) {
      T* outp = out.data() + ((b * Co + co) * To) * Fo;
      if (pb) {
        for (Index i = 0; i < To * Fo; ++i) outp[i] = pb[co];
      }
      for (Index ci = 0; ci < Ci; ++ci) {
        const T* xp = px + ((b * Ci + ci) * Ti) * Fi;
        const T* wp = pw + ((co * Ci + ci) * Kt) * Kf;
        for (Index to = 0; to < To; ++to) {
          for (Index kt = 0; kt < Kt; ++kt) {
            Index ti = to * spec.stride_t + kt - spec.pad_t;
            if (ti < 0 || ti >= Ti) continue;
            const T* xrow = xp + ti * Fi;
            const T* wrow = wp + kt * Kf;
            T* orow = outp + to * Fo;
            for (Index fo = 0; fo < Fo; ++fo) {
              Index fbase = fo * spec.stride_f - spec.pad_f;
              T acc{0};
              for (Index kf = 0; kf < Kf; ++kf) {
                Index fi = fbase + kf;
                if (fi < 0 || fi >= Fi) continue;
                acc += xrow[fi] * wrow[kf];
              }
              orow[fo] += acc;
            }
          }
        }
      }
    }
  }

  std::function<void(const detail::TensorImpl<T>&)> bp;
  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  if (conv_needs_grad(x, w, bias)) {
    auto ix = x.impl();
    auto iw = w.impl();
    auto ib = bias.defined() ? bias.impl() : nullptr;
    Conv2dSpec sp = spec;
    bp = [ix, iw, ib, sp, B, Ci, Ti, Fi, Co, Kt, Kf, To, Fo](const detail::TensorImpl<T>& o) {
      const T* g = o.grad.data();
      for (Index b = 0; b < B; ++b) {
        for (Index co = 0; co < Co; ++co) {
          const T* gout = g + ((b * Co + co) * To) * Fo;
          if (ib && ib->requires_grad) {
            T acc{0};
            for (Index i = 0; i < To * Fo; ++i) acc += gout[i];
            ib->grad[static_cast<size_t>(co)] += acc;
          }
          for (Index ci = 0; ci < Ci; ++ci) {
            const T* xp = ix->value.data() + ((b * Ci + ci) * Ti) * Fi;
            const T* wp = iw->value.data() + ((co * Ci + ci) * Kt) * Kf;
            T* gx = ix->requires_grad ? ix->grad.data() + ((b * Ci + ci) * Ti) * Fi : nullptr;
            T* gw = iw->requires_grad ? iw->grad.data() + ((co * Ci + ci) * Kt) * Kf : nullptr;
            for (Index to = 0; to < To; ++to) {
              for (Index kt = 0; kt < Kt; ++kt) {
                Index ti = to * sp.stride_t + kt - sp.pad_t;
                if (ti < 0 || ti >= Ti) continue;
                const T* grow = gout + to * Fo;
                for (Index fo = 0; fo < Fo; ++fo) {
                  T gv = grow[fo];
                  if (gv == T{0}) continue;
                  Index fbase = fo * sp.stride_f - sp.pad_f;
                  for (Index kf = 0; kf < Kf; ++kf) {
                    Index fi = fbase + kf;
                    if (fi < 0 || fi >= Fi) continue;
                    if (gx) gx[ti * Fi + fi] += gv * wp[kt * Kf + kf];
                    if (gw) gw[kt * Kf + kf] += gv * xp[ti * Fi + fi];
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return detail::make_op({B, Co, To, Fo}, std::move(out), std::move(parents), std::move(bp),
                         "conv2d");
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           const ConvTranspose2dSpec& spec) {
  if (x.ndim() != 4 || w.ndim() != 4) {
    throw ShapeError(str_cat("conv2d_transpose: expects x (B,C,T,F) and w (Ci,Co,Kt,Kf), got ",
                             shape_str(x.shape()), " and ", shape_str(w.shape())));
  }
  const Index B = x.dim(0), Ci = x.dim(1), Ti = x.dim(2), Fi = x.dim(3);
  const Index Co = w.dim(1), Kt = w.dim(2), Kf = w.dim(3);
  if (w.dim(0) != Ci) {
    throw ShapeError(str_cat("conv2d_transpose: channel mismatch, x has ", Ci, " w expects ",
                             w.dim(0)));
  }
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != Co)) {
    throw ShapeError("conv2d_transpose: bias must be rank 1 of size out-channels");
  }
  if (spec.stride_t < 1 || spec.stride_f < 1 || spec.pad_t < 0 || spec.pad_f < 0 ||
      spec.out_pad_t < 0 || spec.out_pad_f < 0 || spec.out_pad_t >= spec.stride_t ||
      spec.out_pad_f >= spec.stride_f) {
    throw ConfigError("conv2d_transpose: invalid stride/pad/output-pad combination");
  }
  const Index To = (Ti - 1) * spec.stride_t - 2 * spec.pad_t + Kt + spec.out_pad_t;
  const Index Fo = (Fi - 1) * spec.stride_f - 2 * spec.pad_f + Kf + spec.out_pad_f;
  if (To <= 0 || Fo <= 0) {
    throw ShapeError(str_cat("conv2d_transpose: non-positive output extent ", To, "x", Fo));
  }

  std::vector<T> out(static_cast<size_t>(B * Co * To * Fo), T{0});
  const T* px = x.data();
  const T* pw = w.data();
  for (Index b = 0; b < B; ++b) {
    for (Index ci = 0; ci < Ci; ++ci) {
      const T* xp = px + ((b * Ci + ci) * Ti) * Fi;
      for (Index co = 0; co < Co; ++co) {
        const T* wp = pw + ((ci * Co + co) * Kt) * Kf;
        T* outp = out.data() + ((b * Co + co) * To) * Fo;
        for (Index t = 0; t < Ti; ++t) {
          for (Index kt = 0; kt < Kt; ++kt) {
            Index to = t * spec.stride_t + kt - spec.pad_t;
            if (to < 0 || to >= To) continue;
            const T* xrow = xp + t * Fi;
            const T* wrow = wp + kt * Kf;
            T* orow = outp + to * Fo;
            for (Index f = 0; f < Fi; ++f) {
              T xv = xrow[f];
              if (xv == T{0}) continue;
              Index fbase = f * spec.stride_f - spec.pad_f;
              for (Index kf = 0; kf < Kf; ++kf) {
                Index fo = fbase + kf;
                if (fo < 0 || fo >= Fo) continue;
                orow[fo] += xv * wrow[kf];
              }
            }
          }
        }
      }
    }
  }
  if (bias.defined()) {
    const T* pb = bias.data();
    for (Index b = 0; b < B; ++b) {
      for (Index co = 0; co < Co; ++co) {
        T* outp = out.data() + ((b * Co + co) * To) * Fo;
        for (Index i = 0; i < To * Fo; ++i) outp[i] += pb[co];
      }
    }
  }

  std::function<void(const detail::TensorImpl<T>&)> bp;
  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  if (conv_needs_grad(x, w, bias)) {
    auto ix = x.impl();
    auto iw = w.impl();
    auto ib = bias.defined() ? bias.impl() : nullptr;
    ConvTranspose2dSpec sp = spec;
    bp = [ix, iw, ib, sp, B, Ci, Ti, Fi, Co, Kt, Kf, To, Fo](const detail::TensorImpl<T>& o) {
      const T* g = o.grad.data();
      if (ib && ib->requires_grad) {
        for (Index b = 0; b < B; ++b) {
          for (Index co = 0; co < Co; ++co) {
            const T* gout = g + ((b * Co + co) * To) * Fo;
            T acc{0};
            for (Index i = 0; i < To * Fo; ++i) acc += gout[i];
            ib->grad[static_cast<size_t>(co)] += acc;
          }
        }
      }
      for (Index b = 0; b < B; ++b) {
        for (Index ci = 0; ci < Ci; ++ci) {
          const T* xp = ix->value.data() + ((b * Ci + ci) * Ti) * Fi;
          T* gx = ix->requires_grad ? ix->grad.data() + ((b * Ci + ci) * Ti) * Fi : nullptr;
          for (Index co = 0; co < Co; ++co) {
            const T* wp = iw->value.data() + ((ci * Co + co) * Kt) * Kf;
            T* gw = iw->requires_grad ? iw->grad.data() + ((ci * Co + co) * Kt) * Kf : nullptr;
            const T* gout = g + ((b * Co + co) * To) * Fo;
            for (Index t = 0; t < Ti; ++t) {
              for (Index kt = 0; kt < Kt; ++kt) {
                Index to = t * sp.stride_t + kt - sp.pad_t;
                if (to < 0 || to >= To) continue;
                const T* grow = gout + to * Fo;
                for (Index f = 0; f < Fi; ++f) {
                  Index fbase = f * sp.stride_f - sp.pad_f;
                  for (Index kf = 0; kf < Kf; ++kf) {
                    Index fo = fbase + kf;
                    if (fo < 0 || fo >= Fo) continue;
                    T gv = grow[fo];
                    if (gv == T{0}) continue;
                    if (gx) gx[t * Fi + f] += gv * wp[kt * Kf + kf];
                    if (gw) gw[kt * Kf + kf] += gv * xp[t * Fi + f];
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return detail::make_op({B, Co, To, Fo}, std::move(out), std::move(parents), std::move(bp),
                         "conv2d_transpose");
}

template <typename T>
Tensor<T> depthwise_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           Index pad) {
  if (x.ndim() != 3 || w.ndim() != 2) {
    throw ShapeError(str_cat("depthwise_conv1d: expects x (B,C,T) and w (C,K), got ",
                             shape_str(x.shape()), " and ", shape_str(w.shape())));
  }
  const Index B = x.dim(0), C = x.dim(1), Ti = x.dim(2), K = w.dim(1);
  if (w.dim(0) != C) throw ShapeError("depthwise_conv1d: channel mismatch");
  if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != C)) {
    throw ShapeError("depthwise_conv1d: bias must be rank 1 of size channels");
  }
  if (pad < 0) throw ConfigError("depthwise_conv1d: pad must be >= 0");
  const Index To = conv_out_dim(Ti, K, 1, pad, "depthwise_conv1d");

  std::vector<T> out(static_cast<size_t>(B * C * To), T{0});
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = bias.defined() ? bias.data() : nullptr;
  for (Index b = 0; b < B; ++b) {
    for (Index c = 0; c < C; ++c) {
      const T* xp = px + (b * C + c) * Ti;
      const T* wp = pw + c * K;
      T* outp = out.data() + (b * C + c) * To;
      for (Index to = 0; to < To; ++to) {
        T acc = pb ? pb[c] : T{0};
        for (Index k = 0; k < K; ++k) {
          Index ti = to + k - pad;
          if (ti < 0 || ti >= Ti) continue;
          acc += xp[ti] * wp[k];
        }
        outp[to] = acc;
      }
    }
  }

  std::function<void(const detail::TensorImpl<T>&)> bp;
  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  if (conv_needs_grad(x, w, bias)) {
    auto ix = x.impl();
    auto iw = w.impl();
    auto ib = bias.defined() ? bias.impl() : nullptr;
    bp = [ix, iw, ib, pad, B, C, Ti, K, To](const detail::TensorImpl<T>& o) {
      const T* g = o.grad.data();
      for (Index b = 0; b < B; ++b) {
        for (Index c = 0; c < C; ++c) {
          const T* gout = g + (b * C + c) * To;
          const T* xp = ix->value.data() + (b * C + c) * Ti;
          const T* wp = iw->value.data() + c * K;
          T* gx = ix->requires_grad ? ix->grad.data() + (b * C + c) * Ti : nullptr;
          T* gw = iw->requires_grad ? iw->grad.data() + c * K : nullptr;
          for (Index to = 0; to < To; ++to) {
            T gv = gout[to];
            if (gv == T{0}) continue;
            if (ib && ib->requires_grad) ib->grad[static_cast<size_t>(c)] += gv;
            for (Index k = 0; k < K; ++k) {
              Index ti = to + k - pad;
              if (ti < 0 || ti >= Ti) continue;
              if (gx) gx[ti] += gv * wp[k];
              if (gw) gw[k] += gv * xp[ti];
            }
          }
        }
      }
    };
  }
  return detail::make_op({B, C, To}, std::move(out), std::move(parents), std::move(bp),
                         "depthwise_conv1d");
}

#define MCGASR_INSTANTIATE_CONV(T)                                                         \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                               const Conv2dSpec&);                                        \
  template Tensor<T> conv2d_transpose<T>(const Tensor<T>&, const Tensor<T>&,              \
                                         const Tensor<T>&, const ConvTranspose2dSpec&);   \
  template Tensor<T> depthwise_conv1d<T>(const Tensor<T>&, const Tensor<T>&,              \
                                         const Tensor<T>&, Index);
MCGASR_INSTANTIATE_CONV(float)
MCGASR_INSTANTIATE_CONV(double)
#undef MCGASR_INSTANTIATE_CONV

}  // namespace mcgasr
