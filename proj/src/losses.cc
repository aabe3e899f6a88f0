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

#include "mcgasr/losses.h"

#include <cmath>
#include <utility>
#include <vector>

#include "mcgasr/common.h"

namespace mcgasr {

namespace {

template <typename T>
void check_detached(const Tensor<T>& t, const char* what) {
  if (t.requires_grad()) {
    throw Error(str_cat(what, ": clean-branch tensor still carries gradient lineage; "
                              "detach it before computing the loss"));
  }
}

template <typename T>
void check_finite_part(const Tensor<T>& part, const char* name) {
  if (!part.defined() || part.size() != 1) {
    throw ShapeError(str_cat("total_loss: ", name, " must be a defined scalar"));
  }
  if (!std::isfinite(static_cast<double>(part.data()[0]))) {
    throw NumericError(str_cat("total_loss: component ", name, " is not finite"));
  }
}

}  // namespace

template <typename T>
Tensor<T> expand_mask(const Tensor<T>& frame_mask, Index width) {
  if (frame_mask.ndim() != 2) {
    throw ShapeError(str_cat("expand_mask: frame mask must be (batch, time), got ",
                             shape_str(frame_mask.shape())));
  }
  if (width < 1) throw ShapeError("expand_mask: width must be positive");
  const Index b = frame_mask.dim(0), t = frame_mask.dim(1);
  std::vector<T> data(static_cast<size_t>(b * t * width));
  const T* m = frame_mask.data();
  for (Index i = 0; i < b * t; ++i) {
    std::fill_n(data.begin() + i * width, width, m[i]);
  }
  return Tensor<T>::from_data({b, t, width}, std::move(data));
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& mask) {
  Tensor<T> diff = abs_op(sub(a, b));
  if (!mask.defined()) return mean_all(diff);
  if (mask.shape() != a.shape()) {
    throw ShapeError(str_cat("l1_mean: mask shape ", shape_str(mask.shape()),
                             " does not match ", shape_str(a.shape())));
  }
  double count = 0;
  for (Index i = 0; i < mask.size(); ++i) count += static_cast<double>(mask.data()[i]);
  if (count <= 0) throw ConfigError("l1_mean: mask excludes every element");
  return mul_scalar(sum_all(mul(diff, mask)), static_cast<T>(1.0 / count));
}

template <typename T>
Tensor<T> gate_loss(const std::vector<Tensor<T>>& gates, const std::vector<Tensor<T>>& labels,
                    const Tensor<T>& mask) {
  if (gates.empty() || gates.size() != labels.size()) {
    throw ShapeError(str_cat("gate_loss: ", gates.size(), " gates vs ", labels.size(),
                             " label sets"));
  }
  Tensor<T> total;
  for (size_t i = 0; i < gates.size(); ++i) {
    check_detached(labels[i], "gate_loss");
    Tensor<T> term = l1_mean(gates[i], labels[i], mask);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
Tensor<T> filtered_consistency_loss(const std::vector<Tensor<T>>& noisy,
                                    const std::vector<Tensor<T>>& clean_detached,
                                    const Tensor<T>& mask) {
  if (noisy.empty() || noisy.size() != clean_detached.size()) {
    throw ShapeError(str_cat("filtered_consistency_loss: ", noisy.size(), " noisy vs ",
                             clean_detached.size(), " clean tensors"));
  }
  Tensor<T> total;
  for (size_t i = 0; i < noisy.size(); ++i) {
    check_detached(clean_detached[i], "filtered_consistency_loss");
    Tensor<T> term = l1_mean(noisy[i], clean_detached[i], mask);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

template <typename T>
Tensor<T> encoder_consistency_loss(const Tensor<T>& noisy, const Tensor<T>& clean_detached,
                                   const Tensor<T>& mask) {
  check_detached(clean_detached, "encoder_consistency_loss");
  return l1_mean(noisy, clean_detached, mask);
}

template <typename T>
JointLossBreakdown<T> total_loss(const Tensor<T>& l_g, const Tensor<T>& l_r,
                                 const Tensor<T>& l_o, const Tensor<T>& l_ctc,
                                 const JointLossWeights<T>& weights) {
  check_finite_part(l_g, "l_g");
  check_finite_part(l_r, "l_r");
  check_finite_part(l_o, "l_o");
  check_finite_part(l_ctc, "l_ctc");
  JointLossBreakdown<T> out;
  out.l_g = l_g;
  out.l_r = l_r;
  out.l_o = l_o;
  out.l_ctc = l_ctc;
  out.weights = weights;
  out.total = add(add(add(mul_scalar(l_g, weights.gate), mul_scalar(l_r, weights.filtered)),
                      mul_scalar(l_o, weights.encoder)),
                  mul_scalar(l_ctc, weights.ctc));
  return out;
}

#define MCGASR_INSTANTIATE_LOSSES(T)                                                          \
  template Tensor<T> expand_mask<T>(const Tensor<T>&, Index);                                 \
  template Tensor<T> l1_mean<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> gate_loss<T>(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&, \
                                  const Tensor<T>&);                                          \
  template Tensor<T> filtered_consistency_loss<T>(const std::vector<Tensor<T>>&,              \
                                                  const std::vector<Tensor<T>>&,              \
                                                  const Tensor<T>&);                          \
  template Tensor<T> encoder_consistency_loss<T>(const Tensor<T>&, const Tensor<T>&,          \
                                                 const Tensor<T>&);                           \
  template JointLossBreakdown<T> total_loss<T>(const Tensor<T>&, const Tensor<T>&,            \
                                               const Tensor<T>&, const Tensor<T>&,            \
                                               const JointLossWeights<T>&);
MCGASR_INSTANTIATE_LOSSES(float)
MCGASR_INSTANTIATE_LOSSES(double)
#undef MCGASR_INSTANTIATE_LOSSES

}  // namespace mcgasr
