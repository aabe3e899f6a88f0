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
#include <string>
#include <vector>

#include "doctest.h"
#include "gradcheck.h"
#include "mcgasr/conformer.h"

namespace mcgasr {
namespace {

using testing::grad_check;
using testing::weighted_sum;

// One narrow block so finite differences and ablations stay cheap.
ConformerConfig block_test_config() {
  ConformerConfig cfg = ConformerConfig::small(4, 8);
  cfg.num_blocks = 1;
  cfg.d_model = 8;
  cfg.ffn_dim = 16;
  cfg.heads = 2;
  cfg.conv_kernel = 5;
  cfg.dropout = 0.0;
  return cfg;
}

// Zeroes every tensor of one block except the final layer norm, which keeps
// its identity initialization. All residual branches then contribute nothing.
template <typename T>
void zero_block(ParamMap<T>& params, const std::string& base) {
  for (auto& [name, t] : params.items()) {
    if (name.rfind(base, 0) != 0) continue;
    if (name.find(".ln.") != std::string::npos) continue;
    std::fill(t.data(), t.data() + t.size(), T{0});
  }
}

TEST_CASE("conformer config validation and presets") {
  auto full = ConformerConfig::full(30);
  CHECK(full.num_blocks == 12);
  CHECK(full.d_model == 256);
  CHECK(full.ffn_dim == 2048);
  CHECK(full.heads == 4);
  CHECK(full.conv_kernel == 15);
  CHECK(full.input_norm == ConformerConfig::InputNorm::kBatchNorm);
  CHECK_NOTHROW(full.validate());

  auto small = ConformerConfig::small(5);
  CHECK(small.num_blocks == 2);
  CHECK(small.d_model == 64);
  CHECK_NOTHROW(small.validate());

  auto bad = small;
  bad.d_model = 66;  // not divisible by 4 heads
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small;
  bad.conv_kernel = 14;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small;
  bad.vocab = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(small.subsampled_len(100) == 25);
  CHECK(small.subsampled_len(8) == 2);
  CHECK(small.subsampled_len(99) == 25);
  CHECK(small.subsampled_len(97) == 25);
}

TEST_CASE("conformer forward shapes and subsampling arithmetic") {
  ConformerConfig cfg = ConformerConfig::small(5, 40);
  cfg.dropout = 0.0;
  Rng rng(3);
  ParamMap<float> params;
  ConformerAsr<float> model(cfg, rng, params);

  CHECK(params.get("asr/csl.proj.w").shape() == Shape{64, 64 * 10});
  CHECK(params.get("asr/blk0.att.q.w").shape() == Shape{64, 64});
  CHECK(params.get("asr/ctc.w").shape() == Shape{6, 64});
  CHECK(params.contains("asr/input_bn.running_mean"));

  auto x = Tensor<float>::uniform({2, 100, 40}, 1.0f, rng);
  NoGradGuard ng;
  auto out = model.forward(x, {}, BnMode::kEval);
  CHECK(out.encoded.shape() == Shape{2, 25, 64});
  CHECK(out.logits.shape() == Shape{2, 25, 6});
  REQUIRE(out.out_lengths.size() == 2);
  CHECK(out.out_lengths[0] == 25);
  for (Index i = 0; i < out.logits.size(); ++i) CHECK(std::isfinite(out.logits.data()[i]));

  auto short_x = Tensor<float>::uniform({1, 7, 40}, 1.0f, rng);
  CHECK_THROWS_WITH_AS(model.forward(short_x, {}, BnMode::kEval),
                       doctest::Contains("at least 8"), ShapeError);
  auto wrong_bins = Tensor<float>::uniform({1, 20, 39}, 1.0f, rng);
  CHECK_THROWS_AS(model.forward(wrong_bins, {}, BnMode::kEval), ShapeError);
  CHECK_THROWS_AS(model.forward(x, {100}, BnMode::kEval), ShapeError);
  CHECK_THROWS_AS(model.forward(x, {100, 101}, BnMode::kEval), ShapeError);

  auto mixed = model.forward(x, {100, 57}, BnMode::kEval);
  CHECK(mixed.out_lengths[0] == 25);
  CHECK(mixed.out_lengths[1] == 15);  // ceil(ceil(57/2)/2)
}

TEST_CASE("conformer subsample propagates only biases on zero input") {
  ConformerConfig cfg = ConformerConfig::small(5, 40);
  cfg.dropout = 0.0;
  Rng rng(8);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  NoGradGuard ng;

  auto x = Tensor<double>::zeros({1, 16, 40});
  auto sub = model.subsample(x, BnMode::kEval);
  CHECK(sub.shape() == Shape{1, 4, 64});
  // A zero signal is translation invariant, so every frame must carry the
  // same bias-derived vector.
  for (Index t = 1; t < sub.dim(1); ++t) {
    for (Index d = 0; d < sub.dim(2); ++d) {
      CHECK(sub.at({0, t, d}) == doctest::Approx(sub.at({0, 0, d})).epsilon(1e-12));
    }
  }
}

TEST_CASE("conformer batch items are independent in eval mode") {
  ConformerConfig cfg = ConformerConfig::small(5, 40);
  cfg.dropout = 0.0;
  Rng rng(10);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  NoGradGuard ng;

  auto x = Tensor<double>::uniform({1, 24, 40}, 1.0, rng);
  auto both = concat<double>({x, x}, 0);
  auto one = model.forward(x, {}, BnMode::kEval);
  auto two = model.forward(both, {}, BnMode::kEval);
  REQUIRE(two.logits.shape() == Shape{2, 6, 6});
  for (Index t = 0; t < 6; ++t) {
    for (Index v = 0; v < 6; ++v) {
      CHECK(two.logits.at({0, t, v}) == one.logits.at({0, t, v}));
      CHECK(two.logits.at({1, t, v}) == one.logits.at({0, t, v}));
    }
  }
}

TEST_CASE("conformer block with zeroed sublayers is a pure layer norm") {
  ConformerConfig cfg = block_test_config();
  Rng rng(14);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  zero_block(params, "asr/blk0.");

  auto x = Tensor<double>::uniform({2, 5, 8}, 1.5, rng);
  auto out = model.block_forward(0, x, {}, BnMode::kEval);
  REQUIRE(out.shape() == x.shape());
  for (Index b = 0; b < 2; ++b) {
    for (Index t = 0; t < 5; ++t) {
      double mean = 0, var = 0;
      for (Index d = 0; d < 8; ++d) mean += x.at({b, t, d});
      mean /= 8;
      for (Index d = 0; d < 8; ++d) {
        double c = x.at({b, t, d}) - mean;
        var += c * c;
      }
      var /= 8;
      for (Index d = 0; d < 8; ++d) {
        double want = (x.at({b, t, d}) - mean) / std::sqrt(var + 1e-5);
        CHECK(out.at({b, t, d}) == doctest::Approx(want).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("attention over a single frame is the value projection") {
  ConformerConfig cfg = block_test_config();
  Rng rng(15);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);

  // Make the output projection the identity so the head concatenation is
  // exactly the value rows.
  auto& wo = params.get("asr/blk0.att.o.w");
  std::fill(wo.data(), wo.data() + wo.size(), 0.0);
  for (Index i = 0; i < 8; ++i) wo.at({i, i}) = 1.0;
  auto& bo = params.get("asr/blk0.att.o.b");
  std::fill(bo.data(), bo.data() + bo.size(), 0.0);

  auto x = Tensor<double>::uniform({1, 1, 8}, 1.0, rng);
  NoGradGuard ng;
  auto att = model.self_attention(0, x, {});
  REQUIRE(att.shape() == Shape{1, 1, 8});

  const auto& wv = params.get("asr/blk0.att.v.w");
  const auto& bv = params.get("asr/blk0.att.v.b");
  for (Index j = 0; j < 8; ++j) {
    double want = bv.at({j});
    for (Index k = 0; k < 8; ++k) want += x.at({0, 0, k}) * wv.at({j, k});
    CHECK(att.at({0, 0, j}) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("attention mask ignores padded key frames") {
  ConformerConfig cfg = block_test_config();
  Rng rng(16);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  NoGradGuard ng;

  auto head = Tensor<double>::uniform({1, 3, 8}, 1.0, rng);
  auto junk = Tensor<double>::uniform({1, 2, 8}, 9.0, rng);
  auto padded = concat<double>({head, junk}, 1);
  auto att_full = model.self_attention(0, head, {});
  auto att_masked = model.self_attention(0, padded, {3});
  for (Index t = 0; t < 3; ++t) {
    for (Index d = 0; d < 8; ++d) {
      CHECK(att_masked.at({0, t, d}) == doctest::Approx(att_full.at({0, t, d})).epsilon(1e-9));
    }
  }
}

TEST_CASE("conformer block gradient matches finite differences") {
  ConformerConfig cfg = block_test_config();
  Rng rng(17);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  auto x = Tensor<double>::uniform({2, 5, 8}, 0.8, rng, true);

  std::vector<Tensor<double>> leaves;
  leaves.push_back(x);
  for (const auto& [name, p] : params.items()) {
    if (p.requires_grad()) leaves.push_back(p);
  }
  auto r = grad_check(
      [&] { return weighted_sum(model.block_forward(0, x, {}, BnMode::kTrainNoUpdate)); },
      leaves);
  INFO(r.worst);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("ctc head is one linear map without softmax") {
  ConformerConfig cfg = ConformerConfig::small(3, 40);
  cfg.dropout = 0.0;
  Rng rng(18);
  ParamMap<double> params;
  ConformerAsr<double> model(cfg, rng, params);
  NoGradGuard ng;

  auto x = Tensor<double>::uniform({1, 12, 40}, 1.0, rng);
  auto out = model.forward(x, {}, BnMode::kEval);
  const auto& w = params.get("asr/ctc.w");  // (V+1, d)
  const auto& b = params.get("asr/ctc.b");
  for (Index t = 0; t < out.encoded.dim(1); ++t) {
    for (Index v = 0; v < 4; ++v) {
      double want = b.at({v});
      for (Index d = 0; d < 64; ++d) want += out.encoded.at({0, t, d}) * w.at({v, d});
      CHECK(out.logits.at({0, t, v}) == doctest::Approx(want).epsilon(1e-9));
    }
  }

  // Zero weights collapse the logits to a constant row, a uniform posterior.
  auto& wt = params.get("asr/ctc.w");
  auto& bt = params.get("asr/ctc.b");
  std::fill(wt.data(), wt.data() + wt.size(), 0.0);
  std::fill(bt.data(), bt.data() + bt.size(), 0.0);
  auto flat = model.forward(x, {}, BnMode::kEval);
  for (Index i = 0; i < flat.logits.size(); ++i) CHECK(flat.logits.data()[i] == 0.0);
}

TEST_CASE("conformer eval forward is bitwise deterministic") {
  ConformerConfig cfg = ConformerConfig::small(5, 40);
  Rng rng(19);
  ParamMap<float> params;
  ConformerAsr<float> model(cfg, rng, params);
  auto x = Tensor<float>::uniform({2, 20, 40}, 1.0f, rng);
  NoGradGuard ng;
  auto a = model.forward(x, {}, BnMode::kEval);
  auto b = model.forward(x, {}, BnMode::kEval);
  for (Index i = 0; i < a.logits.size(); ++i) {
    CHECK(a.logits.data()[i] == b.logits.data()[i]);
  }

  // Dropout draws come from the supplied generator, so a fixed seed fixes
  // the training-mode output as well.
  Rng d1(42), d2(42), d3(43);
  auto t1 = model.forward(x, {}, BnMode::kTrain, &d1);
  auto t2 = model.forward(x, {}, BnMode::kTrain, &d2);
  auto t3 = model.forward(x, {}, BnMode::kTrain, &d3);
  bool same = true, differ = false;
  for (Index i = 0; i < t1.logits.size(); ++i) {
    same = same && t1.logits.data()[i] == t2.logits.data()[i];
    differ = differ || t1.logits.data()[i] != t3.logits.data()[i];
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("conformer full-size preset is constructible") {
  ConformerConfig cfg = ConformerConfig::full(30, 80);
  Rng rng(20);
  ParamMap<float> params;
  ConformerAsr<float> model(cfg, rng, params);
  CHECK(params.contains("asr/blk11.ln.gamma"));
  CHECK_FALSE(params.contains("asr/blk12.ffn1.lin1.w"));
  CHECK(params.get("asr/csl.proj.w").shape() == Shape{256, 256 * 20});
  CHECK(params.get("asr/blk0.ffn1.lin1.w").shape() == Shape{2048, 256});
  CHECK(params.get("asr/blk0.conv.dw.w").shape() == Shape{256, 15});
  CHECK(params.get("asr/ctc.w").shape() == Shape{31, 256});
  CHECK(params.num_elements() > 8'000'000);
}

}  // namespace
}  // namespace mcgasr
