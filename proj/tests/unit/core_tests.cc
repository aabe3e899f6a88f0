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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.h"
#include "mcgasr/tensor.h"

using namespace mcgasr;
using mcgasr::testing::grad_check;
using mcgasr::testing::weighted_sum;

namespace {

Tensor<double> rand_leaf(Shape shape, Rng& rng, double bound = 1.0) {
  return Tensor<double>::uniform(std::move(shape), bound, rng, /*requires_grad=*/true);
}

}  // namespace

TEST_CASE("tensor factories and accessors") {
  auto z = Tensor<float>::zeros({2, 3});
  CHECK(z.size() == 6);
  CHECK(z.ndim() == 2);
  CHECK(z.at({1, 2}) == 0.0f);

  auto f = Tensor<float>::full({2, 2}, 3.5f);
  CHECK(f.at({0, 1}) == 3.5f);

  auto d = Tensor<float>::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(d.at({1, 0}) == 3.0f);
  d.at({1, 0}) = 9.0f;
  CHECK(d.at({1, 0}) == 9.0f);

  CHECK(Tensor<float>::scalar(2.0f).item() == 2.0f);
  CHECK_THROWS_AS(d.at({2, 0}), ShapeError);
  CHECK_THROWS_AS(d.at({0}), ShapeError);
  CHECK_THROWS_AS((Tensor<float>::from_data({2, 2}, {1, 2, 3})), ShapeError);
  CHECK_THROWS_AS(d.item(), Error);

  Rng rng(42);
  auto u = Tensor<double>::uniform({100}, 0.5, rng);
  for (Index i = 0; i < u.size(); ++i) {
    CHECK(u.data()[i] >= -0.5);
    CHECK(u.data()[i] <= 0.5);
  }
}

TEST_CASE("rng determinism and scoped derivation") {
  Rng a(7), b(7);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.uniform(0, 1) == b.uniform(0, 1));

  Rng root(7);
  CHECK(root.derive_seed("init") == Rng(7).derive_seed("init"));
  CHECK(root.derive_seed("init") != root.derive_seed("batch"));
  CHECK(root.derive_seed("batch", 0) != root.derive_seed("batch", 1));
  CHECK(root.derive_seed("init") != 7);
}

TEST_CASE("elementwise op values") {
  auto a = Tensor<double>::from_data({3}, {0.0, 1.0, -2.0});
  CHECK(sigmoid(a).at({0}) == doctest::Approx(0.5));
  CHECK(sigmoid(a).at({1}) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(tanh_op(a).at({0}) == doctest::Approx(0.0));
  CHECK(swish(a).at({0}) == doctest::Approx(0.0));
  CHECK(swish(a).at({1}) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(abs_op(a).at({2}) == doctest::Approx(2.0));
  CHECK(neg(a).at({1}) == doctest::Approx(-1.0));
  CHECK(add_scalar(a, 1.5).at({0}) == doctest::Approx(1.5));
  CHECK(mul_scalar(a, -2.0).at({2}) == doctest::Approx(4.0));

  auto b = Tensor<double>::from_data({3}, {1.0, 2.0, 3.0});
  CHECK(add(a, b).at({2}) == doctest::Approx(1.0));
  CHECK(sub(a, b).at({1}) == doctest::Approx(-1.0));
  CHECK(mul(a, b).at({2}) == doctest::Approx(-6.0));
  CHECK((a + b).at({2}) == doctest::Approx(1.0));

  auto bad = Tensor<double>::zeros({4});
  CHECK_THROWS_AS(add(a, bad), ShapeError);
}

TEST_CASE("glu splits and gates") {
  // pairs (x, y) -> x * sigmoid(y)
  auto a = Tensor<double>::from_data({2, 2}, {2.0, 0.0, 4.0, 100.0});
  auto y = glu(a, 1);
  CHECK(y.shape() == Shape{2, 1});
  CHECK(y.at({0, 0}) == doctest::Approx(1.0));
  CHECK(y.at({1, 0}) == doctest::Approx(4.0).epsilon(1e-9));

  auto odd = Tensor<double>::zeros({2, 3});
  CHECK_THROWS_AS(glu(odd, 1), ShapeError);
}

TEST_CASE("prelu applies per-channel slope on the negative side") {
  auto x = Tensor<double>::from_data({1, 2, 1, 2}, {1.0, -1.0, 2.0, -2.0});
  auto alpha = Tensor<double>::from_data({2}, {0.5, 0.25});
  auto y = prelu(x, alpha, 1);
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(1.0));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(-0.5));
  CHECK(y.at({0, 1, 0, 0}) == doctest::Approx(2.0));
  CHECK(y.at({0, 1, 0, 1}) == doctest::Approx(-0.5));
}

TEST_CASE("matmul matches hand computation including transposes") {
  auto a = Tensor<double>::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Tensor<double>::from_data({3, 2}, {7, 8, 9, 10, 11, 12});
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c.at({0, 0}) == doctest::Approx(58));
  CHECK(c.at({0, 1}) == doctest::Approx(64));
  CHECK(c.at({1, 0}) == doctest::Approx(139));
  CHECK(c.at({1, 1}) == doctest::Approx(154));

  auto at = Tensor<double>::from_data({3, 2}, {1, 4, 2, 5, 3, 6});
  auto bt = Tensor<double>::from_data({2, 3}, {7, 9, 11, 8, 10, 12});
  auto c1 = matmul(at, b, true, false);
  auto c2 = matmul(a, bt, false, true);
  auto c3 = matmul(at, bt, true, true);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) {
      CHECK(c1.at({i, j}) == doctest::Approx(c.at({i, j})));
      CHECK(c2.at({i, j}) == doctest::Approx(c.at({i, j})));
      CHECK(c3.at({i, j}) == doctest::Approx(c.at({i, j})));
    }
  }
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("add_bias broadcasts over leading dims") {
  auto a = Tensor<double>::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto bias = Tensor<double>::from_data({3}, {10, 20, 30});
  auto y = add_bias(a, bias);
  CHECK(y.at({0, 0}) == doctest::Approx(11));
  CHECK(y.at({1, 2}) == doctest::Approx(36));
}

TEST_CASE("reshape, slice, concat roundtrip") {
  auto a = Tensor<double>::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto r = reshape(a, {3, 2});
  CHECK(r.at({2, 1}) == doctest::Approx(6));
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);

  auto s0 = slice(a, 1, 0, 1);
  auto s1 = slice(a, 1, 1, 2);
  CHECK(s0.shape() == Shape{2, 1});
  CHECK(s1.shape() == Shape{2, 2});
  CHECK(s0.at({1, 0}) == doctest::Approx(4));
  CHECK(s1.at({0, 1}) == doctest::Approx(3));
  CHECK_THROWS_AS(slice(a, 1, 2, 2), ShapeError);

  auto back = concat<double>({s0, s1}, 1);
  CHECK(back.shape() == a.shape());
  for (Index i = 0; i < a.size(); ++i) CHECK(back.data()[i] == doctest::Approx(a.data()[i]));

  auto rows = concat<double>({slice(a, 0, 0, 1), slice(a, 0, 1, 1)}, 0);
  for (Index i = 0; i < a.size(); ++i) CHECK(rows.data()[i] == doctest::Approx(a.data()[i]));
}

TEST_CASE("permute reorders axes and inverts") {
  Rng rng(11);
  auto a = rand_leaf({2, 3, 4}, rng, 1.0);
  auto p = permute(a, {2, 0, 1});
  CHECK(p.shape() == Shape{4, 2, 3});
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 3; ++j) {
      for (Index k = 0; k < 4; ++k) {
        CHECK(p.at({k, i, j}) == a.at({i, j, k}));
      }
    }
  }
  // {2,0,1} followed by {1,2,0} is the identity.
  auto back = permute(p, {1, 2, 0});
  for (Index i = 0; i < a.size(); ++i) CHECK(back.data()[i] == a.data()[i]);
  CHECK_THROWS_AS(permute(a, {0, 1}), ShapeError);
  CHECK_THROWS_AS(permute(a, {0, 0, 1}), ShapeError);
  CHECK_THROWS_AS(permute(a, {0, 1, 3}), ShapeError);
}

TEST_CASE("reductions") {
  auto a = Tensor<double>::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(sum_all(a).item() == doctest::Approx(10));
  CHECK(mean_all(a).item() == doctest::Approx(2.5));
}

TEST_CASE("softmax rows sum to one and log_softmax agrees") {
  Rng rng(3);
  auto a = rand_leaf({4, 7}, rng, 3.0);
  auto s = softmax_lastdim(a);
  auto ls = log_softmax_lastdim(a);
  for (Index r = 0; r < 4; ++r) {
    double total = 0;
    for (Index j = 0; j < 7; ++j) {
      total += s.at({r, j});
      CHECK(std::exp(ls.at({r, j})) == doctest::Approx(s.at({r, j})));
    }
    CHECK(total == doctest::Approx(1.0));
  }
  auto known = softmax_lastdim(Tensor<double>::from_data({1, 2}, {0.0, std::log(3.0)}));
  CHECK(known.at({0, 0}) == doctest::Approx(0.25));
  CHECK(known.at({0, 1}) == doctest::Approx(0.75));
}

TEST_CASE("batch_norm normalizes per channel and updates running stats") {
  // channel 0 holds {1,3}, channel 1 holds {2,6}
  auto x = Tensor<double>::from_data({1, 2, 1, 2}, {1, 3, 2, 6});
  auto gamma = Tensor<double>::ones({2});
  auto beta = Tensor<double>::zeros({2});
  std::vector<double> rm(2, 0.0), rv(2, 1.0);
  auto y = batch_norm(x, gamma, beta, rm, rv, 1, BnMode::kTrain, 0.1, 1e-12);
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(-1.0));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(1.0));
  CHECK(y.at({0, 1, 0, 0}) == doctest::Approx(-1.0));
  CHECK(y.at({0, 1, 0, 1}) == doctest::Approx(1.0));
  CHECK(rm[0] == doctest::Approx(0.2));   // 0.9*0 + 0.1*2
  CHECK(rm[1] == doctest::Approx(0.4));
  CHECK(rv[0] == doctest::Approx(1.0));   // 0.9*1 + 0.1*1
  CHECK(rv[1] == doctest::Approx(1.3));   // 0.9*1 + 0.1*4

  // kTrainNoUpdate leaves running stats alone but still uses batch stats
  std::vector<double> rm2(2, 5.0), rv2(2, 5.0);
  auto y2 = batch_norm(x, gamma, beta, rm2, rv2, 1, BnMode::kTrainNoUpdate, 0.1, 1e-12);
  CHECK(y2.at({0, 0, 0, 0}) == doctest::Approx(-1.0));
  CHECK(rm2[0] == doctest::Approx(5.0));
  CHECK(rv2[1] == doctest::Approx(5.0));

  // kEval uses the running stats as-is
  std::vector<double> rm3 = {2.0, 4.0}, rv3 = {1.0, 4.0};
  auto y3 = batch_norm(x, gamma, beta, rm3, rv3, 1, BnMode::kEval, 0.1, 1e-12);
  CHECK(y3.at({0, 0, 0, 0}) == doctest::Approx(-1.0));
  CHECK(y3.at({0, 1, 0, 1}) == doctest::Approx(1.0));
}

TEST_CASE("layer_norm normalizes rows") {
  auto x = Tensor<double>::from_data({2, 2}, {1, 3, 10, 30});
  auto gamma = Tensor<double>::ones({2});
  auto beta = Tensor<double>::zeros({2});
  auto y = layer_norm(x, gamma, beta, 1e-12);
  CHECK(y.at({0, 0}) == doctest::Approx(-1.0));
  CHECK(y.at({0, 1}) == doctest::Approx(1.0));
  CHECK(y.at({1, 0}) == doctest::Approx(-1.0));
  CHECK(y.at({1, 1}) == doctest::Approx(1.0));

  auto g2 = Tensor<double>::from_data({2}, {2.0, 2.0});
  auto b2 = Tensor<double>::from_data({2}, {1.0, 1.0});
  auto y2 = layer_norm(x, g2, b2, 1e-12);
  CHECK(y2.at({0, 0}) == doctest::Approx(-1.0));
  CHECK(y2.at({0, 1}) == doctest::Approx(3.0));
}

TEST_CASE("conv2d values and output extents") {
  auto x = Tensor<double>::from_data({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto w = Tensor<double>::from_data({1, 1, 2, 2}, {1, 0, 0, 1});
  auto y = conv2d(x, w, Tensor<double>(), {});
  CHECK(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(6));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(8));
  CHECK(y.at({0, 0, 1, 0}) == doctest::Approx(12));
  CHECK(y.at({0, 0, 1, 1}) == doctest::Approx(14));

  auto bias = Tensor<double>::from_data({1}, {100.0});
  auto yb = conv2d(x, w, bias, {});
  CHECK(yb.at({0, 0, 0, 0}) == doctest::Approx(106));

  // kernel 3 stride 2 pad 1 halves the extent, rounding up
  Conv2dSpec s{2, 2, 1, 1};
  auto big = Tensor<double>::zeros({1, 1, 100, 80});
  auto k = Tensor<double>::zeros({4, 1, 3, 3});
  auto h1 = conv2d(big, k, Tensor<double>(), s);
  CHECK(h1.shape() == Shape{1, 4, 50, 40});
  auto k2 = Tensor<double>::zeros({4, 4, 3, 3});
  auto h2 = conv2d(h1, k2, Tensor<double>(), s);
  CHECK(h2.shape() == Shape{1, 4, 25, 20});

  CHECK_THROWS_AS(conv2d(Tensor<double>::zeros({1, 1, 1, 1}),
                         Tensor<double>::zeros({1, 1, 3, 3}), Tensor<double>(), Conv2dSpec{}),
                  ShapeError);
  CHECK_THROWS_AS(conv2d(x, Tensor<double>::zeros({1, 2, 2, 2}), Tensor<double>(), Conv2dSpec{}),
                  ShapeError);
}

TEST_CASE("conv2d_transpose inverts the strided extent") {
  ConvTranspose2dSpec ts;
  ts.stride_t = 2;
  ts.stride_f = 2;
  ts.pad_t = 1;
  ts.pad_f = 1;
  ts.out_pad_t = 1;
  ts.out_pad_f = 1;
  auto x = Tensor<double>::zeros({1, 3, 25, 20});
  auto w = Tensor<double>::zeros({3, 5, 3, 3});
  auto y = conv2d_transpose(x, w, Tensor<double>(), ts);
  CHECK(y.shape() == Shape{1, 5, 50, 40});

  // stride 1, k1: pure channel mixing; identity weight passes values through
  auto x1 = Tensor<double>::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto w1 = Tensor<double>::from_data({1, 1, 1, 1}, {1.0});
  auto y1 = conv2d_transpose(x1, w1, Tensor<double>(), {});
  for (Index i = 0; i < 4; ++i) CHECK(y1.data()[i] == doctest::Approx(x1.data()[i]));

  // adjointness: <conv(x), y> == <x, conv_transpose(y)> with shared weights
  Rng rng(11);
  auto xa = Tensor<double>::uniform({1, 2, 6, 5}, 1.0, rng);
  auto wa = Tensor<double>::uniform({3, 2, 3, 3}, 1.0, rng);  // (Co,Ci,Kt,Kf)
  Conv2dSpec fs{2, 2, 1, 1};
  auto fwd = conv2d(xa, wa, Tensor<double>(), fs);
  auto ya = Tensor<double>::uniform(fwd.shape(), 1.0, rng);
  double lhs = sum_all(mul(fwd, ya)).item();
  // the forward (Co,Ci,Kt,Kf) buffer reads as the adjoint's (Ci,Co,Kt,Kf)
  auto wt = reshape(wa, {3, 2, 3, 3});
  ConvTranspose2dSpec as;
  as.stride_t = 2;
  as.stride_f = 2;
  as.pad_t = 1;
  as.pad_f = 1;
  as.out_pad_t = 1;
  as.out_pad_f = 0;
  // out_pad picked so the adjoint output matches xa's extent (6 = (3-1)*2-2+3+1, 5 = (3-1)*2-2+3+0)
  auto adj = conv2d_transpose(ya, wt, Tensor<double>(), as);
  REQUIRE(adj.shape() == xa.shape());
  double rhs = sum_all(mul(xa, adj)).item();
  CHECK(lhs == doctest::Approx(rhs));
}

TEST_CASE("depthwise_conv1d") {
  auto x = Tensor<double>::from_data({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  auto w_id = Tensor<double>::from_data({2, 1}, {1.0, 1.0});
  auto y = depthwise_conv1d(x, w_id, Tensor<double>(), 0);
  for (Index i = 0; i < 6; ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i]));

  // k3 pad1 keeps length; moving sum at the edge drops the out-of-range tap
  auto w3 = Tensor<double>::from_data({2, 3}, {1, 1, 1, 1, 1, 1});
  auto y3 = depthwise_conv1d(x, w3, Tensor<double>(), 1);
  CHECK(y3.shape() == Shape{1, 2, 3});
  CHECK(y3.at({0, 0, 0}) == doctest::Approx(3));   // 0+1+2
  CHECK(y3.at({0, 0, 1}) == doctest::Approx(6));   // 1+2+3
  CHECK(y3.at({0, 1, 2}) == doctest::Approx(11));  // 5+6+0
}

TEST_CASE("autograd mechanics") {
  SUBCASE("simple chain d(sum(a*a))/da = 2a") {
    auto a = Tensor<double>::from_data({3}, {1, -2, 3}, true);
    auto loss = sum_all(mul(a, a));
    loss.backward();
    CHECK(a.grad()[0] == doctest::Approx(2));
    CHECK(a.grad()[1] == doctest::Approx(-4));
    CHECK(a.grad()[2] == doctest::Approx(6));
  }
  SUBCASE("backward twice on the same root throws") {
    auto a = Tensor<double>::from_data({2}, {1, 2}, true);
    auto loss = sum_all(a);
    loss.backward();
    CHECK_THROWS_AS(loss.backward(), Error);
  }
  SUBCASE("grads accumulate across graphs until zero_grad") {
    auto a = Tensor<double>::from_data({2}, {1, 2}, true);
    sum_all(a).backward();
    sum_all(a).backward();
    CHECK(a.grad()[0] == doctest::Approx(2));
    a.zero_grad();
    sum_all(a).backward();
    CHECK(a.grad()[0] == doctest::Approx(1));
  }
  SUBCASE("non-scalar root rejected") {
    auto a = Tensor<double>::from_data({2}, {1, 2}, true);
    auto y = mul(a, a);
    CHECK_THROWS_AS(y.backward(), Error);
  }
  SUBCASE("NoGradGuard severs recording") {
    auto a = Tensor<double>::from_data({2}, {1, 2}, true);
    Tensor<double> y;
    {
      NoGradGuard ng;
      y = mul(a, a);
    }
    CHECK_FALSE(y.requires_grad());
    auto z = sum_all(mul(y, a));  // y is a constant here
    z.backward();
    CHECK(a.grad()[0] == doctest::Approx(1.0));  // d(y0*a0)/da0 = y0 = 1
    CHECK(a.grad()[1] == doctest::Approx(4.0));
  }
  SUBCASE("detach stops gradient") {
    auto a = Tensor<double>::from_data({2}, {3, 4}, true);
    auto y = detach(mul(a, a));
    CHECK_FALSE(y.requires_grad());
    sum_all(mul(y, a)).backward();
    CHECK(a.grad()[0] == doctest::Approx(9.0));
    CHECK(a.grad()[1] == doctest::Approx(16.0));
  }
  SUBCASE("set_requires_grad is leaf-only") {
    auto a = Tensor<double>::from_data({2}, {1, 2}, true);
    auto y = mul(a, a);
    CHECK_THROWS_AS(y.set_requires_grad(false), Error);
    auto leaf = Tensor<double>::zeros({2});
    leaf.set_requires_grad(true);
    CHECK(leaf.requires_grad());
  }
  SUBCASE("grad() on non-tracked tensor throws") {
    auto a = Tensor<double>::zeros({2});
    CHECK_THROWS_AS(a.grad(), Error);
  }
  SUBCASE("diamond graph accumulates both paths") {
    auto a = Tensor<double>::from_data({1}, {3.0}, true);
    auto b = mul(a, a);           // a^2
    auto c = add(b, a);           // a^2 + a
    auto loss = sum_all(mul(b, c));  // a^4 + a^3
    loss.backward();
    CHECK(a.grad()[0] == doctest::Approx(4 * 27 + 3 * 9));
  }
}

TEST_CASE("gradcheck spot checks on primitives") {
  Rng rng(1234);
  SUBCASE("mul/add/sub composite") {
    auto a = rand_leaf({3, 4}, rng);
    auto b = rand_leaf({3, 4}, rng);
    auto r = grad_check([&] { return weighted_sum(add(mul(a, b), sub(a, b))); }, {a, b});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("sigmoid-tanh-swish chain") {
    auto a = rand_leaf({2, 5}, rng, 2.0);
    auto r = grad_check([&] { return weighted_sum(swish(tanh_op(sigmoid(a)))); }, {a});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("matmul with transposes") {
    auto a = rand_leaf({3, 4}, rng);
    auto b = rand_leaf({3, 5}, rng);
    auto r = grad_check([&] { return weighted_sum(matmul(a, b, true, false)); }, {a, b});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("batch_norm train mode") {
    auto x = rand_leaf({2, 3, 2, 2}, rng);
    auto g = rand_leaf({3}, rng);
    auto b = rand_leaf({3}, rng);
    std::vector<double> rm(3, 0.0), rv(3, 1.0);
    auto r = grad_check(
        [&] {
          return weighted_sum(batch_norm(x, g, b, rm, rv, 1, BnMode::kTrainNoUpdate, 0.1, 1e-5));
        },
        {x, g, b});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("conv2d strided padded") {
    auto x = rand_leaf({2, 2, 5, 4}, rng);
    auto w = rand_leaf({3, 2, 3, 3}, rng);
    auto bias = rand_leaf({3}, rng);
    Conv2dSpec s{2, 2, 1, 1};
    auto r = grad_check([&] { return weighted_sum(conv2d(x, w, bias, s)); }, {x, w, bias});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("dropout with a fixed mask") {
    auto x = rand_leaf({4, 4}, rng);
    auto r = grad_check(
        [&] {
          Rng mask_rng(99);
          return weighted_sum(dropout(x, 0.4, true, mask_rng));
        },
        {x});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
  SUBCASE("permute") {
    auto x = rand_leaf({2, 3, 4, 2}, rng);
    auto r = grad_check([&] { return weighted_sum(permute(x, {3, 1, 0, 2})); }, {x});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
}
