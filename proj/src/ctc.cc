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

#include "mcgasr/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Index ctc_min_frames(const std::vector<Index>& target) {
  Index need = static_cast<Index>(target.size());
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++need;
  }
  return need;
}

template <typename T>
Tensor<T> ctc_loss(const Tensor<T>& logits, const std::vector<Index>& target) {
  if (logits.ndim() != 2) {
    throw ShapeError(str_cat("ctc: logits must be (frames, vocab+1), got ",
                             shape_str(logits.shape())));
  }
  const Index t_len = logits.dim(0);
  const Index k = logits.dim(1);
  const Index v = k - 1;
  if (v < 1) throw ShapeError("ctc: logits need a blank column plus at least one token");
  for (Index tok : target) {
    if (tok < 1 || tok > v) {
      throw ConfigError(str_cat("ctc: token id ", tok, " outside 1..", v));
    }
  }
  const Index need = ctc_min_frames(target);
  if (t_len < need) {
    throw ShapeError(str_cat("ctc: target of length ", target.size(), " needs at least ", need,
                             " frames, got ", t_len));
  }

  // Row-wise log-softmax in double precision regardless of T.
  std::vector<double> u(static_cast<size_t>(t_len * k));
  {
    const T* z = logits.data();
    for (Index t = 0; t < t_len; ++t) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(z[t * k + j]));
      double total = 0;
      for (Index j = 0; j < k; ++j) total += std::exp(static_cast<double>(z[t * k + j]) - mx);
      double lz = mx + std::log(total);
      for (Index j = 0; j < k; ++j) {
        u[static_cast<size_t>(t * k + j)] = static_cast<double>(z[t * k + j]) - lz;
      }
    }
  }

  // Blank-augmented label sequence: blank, y1, blank, y2, ..., blank.
  const Index s_len = 2 * static_cast<Index>(target.size()) + 1;
  std::vector<Index> lab(static_cast<size_t>(s_len), 0);
  for (size_t i = 0; i < target.size(); ++i) lab[2 * i + 1] = target[i];

  auto at = [s_len](Index t, Index s) { return static_cast<size_t>(t * s_len + s); };
  std::vector<double> alpha(static_cast<size_t>(t_len * s_len), kNegInf);
  alpha[at(0, 0)] = u[static_cast<size_t>(lab[0])];
  if (s_len > 1) alpha[at(0, 1)] = u[static_cast<size_t>(lab[1])];
  for (Index t = 1; t < t_len; ++t) {
    for (Index s = 0; s < s_len; ++s) {
      double acc = alpha[at(t - 1, s)];
      if (s > 0) acc = lse2(acc, alpha[at(t - 1, s - 1)]);
      if (s > 1 && lab[static_cast<size_t>(s)] != 0 &&
          lab[static_cast<size_t>(s)] != lab[static_cast<size_t>(s - 2)]) {
        acc = lse2(acc, alpha[at(t - 1, s - 2)]);
      }
      if (acc != kNegInf) {
        alpha[at(t, s)] = acc + u[static_cast<size_t>(t * k + lab[static_cast<size_t>(s)])];
      }
    }
  }
  double logp = alpha[at(t_len - 1, s_len - 1)];
  if (s_len > 1) logp = lse2(logp, alpha[at(t_len - 1, s_len - 2)]);
  if (!std::isfinite(logp)) {
    throw NumericError("ctc: lattice produced a non-finite log-likelihood");
  }

  // beta[t][s] covers the suffix from t+1..T given state s at t, so the
  // terminal states carry probability one.
  std::vector<double> beta(static_cast<size_t>(t_len * s_len), kNegInf);
  beta[at(t_len - 1, s_len - 1)] = 0;
  if (s_len > 1) beta[at(t_len - 1, s_len - 2)] = 0;
  for (Index t = t_len - 2; t >= 0; --t) {
    for (Index s = 0; s < s_len; ++s) {
      double acc = beta[at(t + 1, s)] == kNegInf
                       ? kNegInf
                       : beta[at(t + 1, s)] +
                             u[static_cast<size_t>((t + 1) * k + lab[static_cast<size_t>(s)])];
      if (s + 1 < s_len && beta[at(t + 1, s + 1)] != kNegInf) {
        acc = lse2(acc, beta[at(t + 1, s + 1)] +
                            u[static_cast<size_t>((t + 1) * k + lab[static_cast<size_t>(s + 1)])]);
      }
      if (s + 2 < s_len && lab[static_cast<size_t>(s + 2)] != 0 &&
          lab[static_cast<size_t>(s + 2)] != lab[static_cast<size_t>(s)] &&
          beta[at(t + 1, s + 2)] != kNegInf) {
        acc = lse2(acc, beta[at(t + 1, s + 2)] +
                            u[static_cast<size_t>((t + 1) * k + lab[static_cast<size_t>(s + 2)])]);
      }
      beta[at(t, s)] = acc;
    }
  }

  std::vector<T> out{static_cast<T>(-logp)};
  std::function<void(const detail::TensorImpl<T>&)> bp;
  if (autograd_enabled() && logits.requires_grad()) {
    auto il = logits.impl();
    bp = [il, u = std::move(u), alpha = std::move(alpha), beta = std::move(beta),
          lab = std::move(lab), logp, t_len, k, s_len](const detail::TensorImpl<T>& o) {
      const double g = static_cast<double>(o.grad[0]);
      std::vector<double> occ(static_cast<size_t>(k));
      for (Index t = 0; t < t_len; ++t) {
        std::fill(occ.begin(), occ.end(), kNegInf);
        for (Index s = 0; s < s_len; ++s) {
          double ab = alpha[static_cast<size_t>(t * s_len + s)] +
                      beta[static_cast<size_t>(t * s_len + s)];
          if (ab != kNegInf) {
            auto& slot = occ[static_cast<size_t>(lab[static_cast<size_t>(s)])];
            slot = lse2(slot, ab);
          }
        }
        for (Index j = 0; j < k; ++j) {
          double y = std::exp(u[static_cast<size_t>(t * k + j)]);
          double through = occ[static_cast<size_t>(j)] == kNegInf
                               ? 0.0
                               : std::exp(occ[static_cast<size_t>(j)] - logp);
          il->grad[static_cast<size_t>(t * k + j)] += static_cast<T>(g * (y - through));
        }
      }
    };
  }
  return detail::make_op<T>({1}, std::move(out), {logits}, std::move(bp), "ctc_loss");
}

template <typename T>
Tensor<T> ctc_loss_batch(const Tensor<T>& logits, const std::vector<Index>& lengths,
                         const std::vector<std::vector<Index>>& targets) {
  if (logits.ndim() != 3) {
    throw ShapeError(str_cat("ctc: batch logits must be (batch, frames, vocab+1), got ",
                             shape_str(logits.shape())));
  }
  const Index b = logits.dim(0);
  if (static_cast<Index>(lengths.size()) != b || static_cast<Index>(targets.size()) != b) {
    throw ShapeError(str_cat("ctc: batch of ", b, " needs ", b, " lengths and targets"));
  }
  Tensor<T> total;
  for (Index i = 0; i < b; ++i) {
    Index len = lengths[static_cast<size_t>(i)];
    if (len < 1 || len > logits.dim(1)) {
      throw ShapeError(str_cat("ctc: bad utterance length ", len));
    }
    Tensor<T> rows = reshape(slice(slice(logits, 0, i, 1), 1, 0, len), {len, logits.dim(2)});
    Tensor<T> li = ctc_loss(rows, targets[static_cast<size_t>(i)]);
    total = total.defined() ? add(total, li) : li;
  }
  return mul_scalar(total, static_cast<T>(1.0 / static_cast<double>(b)));
}

#define MCGASR_INSTANTIATE_CTC(T)                                                       \
  template Tensor<T> ctc_loss<T>(const Tensor<T>&, const std::vector<Index>&);          \
  template Tensor<T> ctc_loss_batch<T>(const Tensor<T>&, const std::vector<Index>&,     \
                                       const std::vector<std::vector<Index>>&);
MCGASR_INSTANTIATE_CTC(float)
MCGASR_INSTANTIATE_CTC(double)
#undef MCGASR_INSTANTIATE_CTC

}  // namespace mcgasr
