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

#ifndef MCGASR_OPTIM_H_
#define MCGASR_OPTIM_H_

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mcgasr/tensor.h"

namespace mcgasr {

// Adam with bias correction over a fixed set of named parameters. A step is
// all-or-nothing: if any gradient is non-finite the step aborts with the
// offending parameter's name and no buffer is touched.
template <typename T>
class Adam {
 public:
  struct Config {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  struct Slot {
    std::string name;
    Tensor<T> param;
    std::vector<T> m;  // first moment
    std::vector<T> v;  // second moment
  };

  explicit Adam(Config cfg) : cfg_(cfg) {}

  void add_param(const std::string& name, Tensor<T> param);

  void step();
  void zero_grad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  Config cfg_;
  std::int64_t step_ = 0;
  std::vector<Slot> slots_;
};

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
template <typename T>
double clip_global_grad_norm(Adam<T>& opt, double max_norm);

// Halve-on-plateau learning rate schedule with a hard stop. An epoch improves
// only if its validation loss is strictly below the best seen; every
// plateau_patience-th consecutive non-improving epoch halves the rate, and
// stop raises after stop_patience consecutive non-improving epochs.
class PlateauSchedule {
 public:
  struct Config {
    double initial_lr = 2e-4;
    double decay_factor = 0.5;
    int plateau_patience = 5;
    int stop_patience = 20;
  };

  struct Update {
    double lr;
    bool stop;
    bool improved;
  };

  explicit PlateauSchedule(Config cfg)
      : cfg_(cfg), lr_(cfg.initial_lr) {}

  Update observe(double val_loss);

  double lr() const { return lr_; }
  double best_loss() const { return best_loss_; }
  int epochs_since_improvement() const { return since_improvement_; }

  // Resume hooks; counters round-trip through the checkpoint meta table.
  void restore(double lr, double best_loss, int since_improvement) {
    lr_ = lr;
    best_loss_ = best_loss;
    since_improvement_ = since_improvement;
  }

 private:
  Config cfg_;
  double lr_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
};

}  // namespace mcgasr

#endif  // MCGASR_OPTIM_H_
