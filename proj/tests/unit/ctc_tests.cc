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

#include <cmath>
#include <vector>

#include "ctc_oracle.h"
#include "doctest.h"
#include "gradcheck.h"
#include "mcgasr/ctc.h"
#include "mcgasr/rng.h"

namespace mcgasr {
namespace {

using testing::ctc_brute_force_nll;
using testing::grad_check;

Tensor<double> rand_logits(Index t, Index k, Rng& rng, bool grad = false) {
  return Tensor<double>::uniform({t, k}, 2.0, rng, grad);
}

// Row-wise softmax probability of class j at frame t, computed directly.
double prob_at(const Tensor<double>& logits, Index t, Index j) {
  double mx = logits.at({t, Index{0}});
  for (Index c = 1; c < logits.dim(1); ++c) mx = std::max(mx, logits.at({t, c}));
  double z = 0;
  for (Index c = 0; c < logits.dim(1); ++c) z += std::exp(logits.at({t, c}) - mx);
  return std::exp(logits.at({t, j}) - mx) / z;
}

TEST_CASE("ctc minimum frame requirement") {
  CHECK(ctc_min_frames({}) == 0);
  CHECK(ctc_min_frames({1}) == 1);
  CHECK(ctc_min_frames({1, 2}) == 2);
  CHECK(ctc_min_frames({1, 1}) == 3);
  CHECK(ctc_min_frames({2, 2, 2}) == 5);
  CHECK(ctc_min_frames({1, 1, 2, 2}) == 6);
}

TEST_CASE("ctc single frame single token") {
  Rng rng(2);
  auto logits = rand_logits(1, 2, rng);
  auto loss = ctc_loss(logits, {1});
  double want = -std::log(prob_at(logits, 0, 1));
  CHECK(loss.item() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ctc two frames one token enumerates three paths") {
  Rng rng(3);
  auto logits = rand_logits(2, 3, rng);
  auto loss = ctc_loss(logits, {2});
  double pa1 = prob_at(logits, 0, 2), pb1 = prob_at(logits, 0, 0);
  double pa2 = prob_at(logits, 1, 2), pb2 = prob_at(logits, 1, 0);
  // Paths: (a,a), (a,blank), (blank,a).
  double p = pa1 * pa2 + pa1 * pb2 + pb1 * pa2;
  CHECK(loss.item() == doctest::Approx(-std::log(p)).epsilon(1e-12));
}

TEST_CASE("ctc empty target is the all-blank path") {
  Rng rng(4);
  auto logits = rand_logits(4, 3, rng);
  auto loss = ctc_loss(logits, {});
  double want = 0;
  for (Index t = 0; t < 4; ++t) want -= std::log(prob_at(logits, t, 0));
  CHECK(loss.item() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ctc matches exhaustive path enumeration") {
  Rng rng(5);
  int checked = 0;
  while (checked < 120) {
    Index t = 1 + static_cast<Index>(rng.uniform_index(6));
    Index v = 1 + static_cast<Index>(rng.uniform_index(3));
    Index u = static_cast<Index>(rng.uniform_index(4));
    std::vector<Index> target;
    for (Index i = 0; i < u; ++i) target.push_back(1 + static_cast<Index>(rng.uniform_index(v)));
    if (ctc_min_frames(target) > t) continue;
    auto logits = rand_logits(t, v + 1, rng);
    double got = ctc_loss(logits, target).item();
    double want = ctc_brute_force_nll(logits, target);
    CHECK(std::abs(got - want) < 1e-8);
    CHECK(got >= 0.0);
    ++checked;
  }
}

TEST_CASE("ctc rejects infeasible targets and bad ids") {
  Rng rng(6);
  auto logits = rand_logits(2, 3, rng);
  CHECK_THROWS_WITH_AS(ctc_loss(logits, {1, 1}), doctest::Contains("at least 3"), ShapeError);
  CHECK_THROWS_AS(ctc_loss(logits, {1, 2, 1}), ShapeError);
  CHECK_THROWS_AS(ctc_loss(logits, {0}), ConfigError);
  CHECK_THROWS_AS(ctc_loss(logits, {3}), ConfigError);
  auto vec = Tensor<double>::uniform({4}, 1.0, rng);
  CHECK_THROWS_AS(ctc_loss(vec, {1}), ShapeError);
  auto blank_only = Tensor<double>::uniform({3, 1}, 1.0, rng);
  CHECK_THROWS_AS(ctc_loss(blank_only, {}), ShapeError);
}

TEST_CASE("ctc loss approaches zero for a saturated single path") {
  auto logits = Tensor<double>::from_data({1, 2}, {-40.0, 40.0});
  auto loss = ctc_loss(logits, {1});
  CHECK(loss.item() >= 0.0);
  CHECK(loss.item() < 1e-8);
}

TEST_CASE("ctc gradient matches finite differences") {
  Rng rng(7);
  SUBCASE("plain target") {
    auto logits = rand_logits(5, 4, rng, true);
    auto r = grad_check([&] { return ctc_loss(logits, {1, 2}); }, {logits});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("repeated token") {
    auto logits = rand_logits(6, 3, rng, true);
    auto r = grad_check([&] { return ctc_loss(logits, {2, 2}); }, {logits});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("empty target") {
    auto logits = rand_logits(4, 3, rng, true);
    auto r = grad_check([&] { return ctc_loss(logits, {}); }, {logits});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_CASE("ctc float path tracks the double computation") {
  Rng rng(8);
  auto d = rand_logits(5, 3, rng);
  std::vector<float> fdata(static_cast<size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) fdata[static_cast<size_t>(i)] = static_cast<float>(d.data()[i]);
  auto f = Tensor<float>::from_data(d.shape(), std::move(fdata));
  double ld = ctc_loss(d, {1, 2}).item();
  float lf = ctc_loss(f, {1, 2}).item();
  CHECK(std::abs(static_cast<double>(lf) - ld) < 1e-5);
}

TEST_CASE("ctc batch mean slices lengths correctly") {
  Rng rng(9);
  auto a = rand_logits(5, 4, rng);
  auto b = rand_logits(5, 4, rng);
  // Utterance b is padded: only its first 3 frames are valid.
  auto batch = concat<double>({reshape(a, {1, 5, 4}), reshape(b, {1, 5, 4})}, 0);
  auto got = ctc_loss_batch(batch, {5, 3}, {{1, 2}, {3}});
  double la = ctc_loss(a, {1, 2}).item();
  double lb = ctc_loss(reshape(slice(b, 0, 0, 3), {3, 4}), {3}).item();
  CHECK(got.item() == doctest::Approx(0.5 * (la + lb)).epsilon(1e-12));

  CHECK_THROWS_AS(ctc_loss_batch(batch, {5}, {{1}, {2}}), ShapeError);
  CHECK_THROWS_AS(ctc_loss_batch(batch, {5, 6}, {{1}, {2}}), ShapeError);
  CHECK_THROWS_AS(ctc_loss_batch(a, {5}, {{1}}), ShapeError);
}

}  // namespace
}  // namespace mcgasr
