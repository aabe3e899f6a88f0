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

#include "mcgasr/optim.h"

#include <cmath>
#include <limits>

namespace mcgasr {

template <typename T>
void Adam<T>::add_param(const std::string& name, Tensor<T> param) {
  if (!param.requires_grad()) {
    throw ConfigError(str_cat("adam: parameter '", name, "' does not require grad"));
  }
  for (const auto& s : slots_) {
    if (s.name == name) throw ConfigError(str_cat("adam: duplicate parameter '", name, "'"));
  }
  Slot slot;
  slot.name = name;
  slot.param = param;
  slot.m.assign(static_cast<size_t>(param.size()), T{0});
  slot.v.assign(static_cast<size_t>(param.size()), T{0});
  slots_.push_back(std::move(slot));
}

template <typename T>
void Adam<T>::step() {
  for (const auto& s : slots_) {
    for (T g : s.param.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericError(str_cat("adam: non-finite gradient in parameter '", s.name, "'"));
      }
    }
  }
  ++step_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (auto& s : slots_) {
    const auto& g = s.param.grad();
    T* p = s.param.data();
    for (size_t i = 0; i < g.size(); ++i) {
      double gi = static_cast<double>(g[i]);
      double m = b1 * static_cast<double>(s.m[i]) + (1.0 - b1) * gi;
      double v = b2 * static_cast<double>(s.v[i]) + (1.0 - b2) * gi * gi;
      s.m[i] = static_cast<T>(m);
      s.v[i] = static_cast<T>(v);
      double mhat = m / corr1;
      double vhat = v / corr2;
      p[i] -= static_cast<T>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& s : slots_) s.param.zero_grad();
}

template <typename T>
double clip_global_grad_norm(Adam<T>& opt, double max_norm) {
  double sq = 0.0;
  for (const auto& s : opt.slots()) {
    for (T g : s.param.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    T scale = static_cast<T>(max_norm / norm);
    for (auto& s : opt.slots()) {
      auto impl = s.param.impl();
      for (auto& g : impl->grad) g *= scale;
    }
  }
  return norm;
}

PlateauSchedule::Update PlateauSchedule::observe(double val_loss) {
  Update u{lr_, false, false};
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    since_improvement_ = 0;
    u.improved = true;
  } else {
    ++since_improvement_;
    if (cfg_.plateau_patience > 0 && since_improvement_ % cfg_.plateau_patience == 0) {
      lr_ *= cfg_.decay_factor;
    }
    if (since_improvement_ >= cfg_.stop_patience) u.stop = true;
  }
  u.lr = lr_;
  return u;
}

template class Adam<float>;
template class Adam<double>;
template double clip_global_grad_norm<float>(Adam<float>&, double);
template double clip_global_grad_norm<double>(Adam<double>&, double);

}  // namespace mcgasr
