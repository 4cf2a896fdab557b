// Copyright 2026 The GDC Lab Authors. All Rights Reserved.
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
// ============================================================================

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gdc/error.h"
#include "gdc/layers.h"
#include "gdc/ops.h"
#include "gdc/tensor.h"
#include "test_util.h"

namespace gdc {
namespace {

using testing::RandomTensor;
using TD = Tensor<double>;
using Fn = std::function<TD(std::span<const TD>)>;

TEST(TensorTest, AddOnes) {
  const Shape s{1, 1, 2, 2};
  const TD sum = Add(TD::Full(s, 1.0), TD::Full(s, 1.0));
  for (double v : sum.values()) EXPECT_EQ(v, 2.0);
}

TEST(TensorTest, ShapeMismatchNamesOp) {
  try {
    Add(TD(Shape{1, 1, 2, 2}), TD(Shape{1, 1, 2, 3}));
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
}

TEST(TensorTest, ConcatAndSliceShapes) {
  const TD a(Shape{1, 3, 8, 8});
  const TD b(Shape{1, 16, 8, 8});
  const TD c = ConcatChannels(a, b);
  EXPECT_EQ(c.shape(), (Shape{1, 19, 8, 8}));
  EXPECT_EQ(SliceChannels(c, 0, 3).shape(), (Shape{1, 3, 8, 8}));
}

TEST(TensorTest, SliceReturnsConcatenatedParts) {
  std::mt19937_64 rng(1);
  const TD a = RandomTensor<double>({1, 2, 3, 3}, rng);
  const TD b = RandomTensor<double>({1, 4, 3, 3}, rng);
  const TD back = SliceChannels(ConcatChannels(a, b), 2, 6);
  EXPECT_TRUE(testing::BitEqual(back, b));
}

TEST(TensorTest, SumOfSquaresGradient) {
  const TD x(Shape{1, 1, 1, 2}, {1.0, 2.0}, true);
  Backward(Sum(Square(x)));
  ASSERT_TRUE(x.has_grad());
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 4.0);
}

TEST(TensorTest, ConstantInputGetsNoGrad) {
  const TD c(Shape{1, 1, 1, 2}, {1.0, 2.0}, false);
  const TD x(Shape{1, 1, 1, 2}, {3.0, 4.0}, true);
  Backward(Sum(Mul(c, x)));
  EXPECT_FALSE(c.has_grad());
  EXPECT_TRUE(x.has_grad());
}

TEST(TensorTest, NonScalarBackwardIsContractError) {
  const TD x(Shape{1, 1, 1, 2}, {1.0, 2.0}, true);
  EXPECT_THROW(Backward(Square(x)), ContractError);
}

TEST(TensorTest, NoGradGuardRecordsNothing) {
  const TD x(Shape{1, 1, 1, 2}, {1.0, 2.0}, true);
  NoGradGuard guard;
  const TD y = Square(x);
  EXPECT_FALSE(y.requires_grad());
}

TEST(TensorTest, RoundHalfAwayFromZero) {
  const TD x(Shape{1, 1, 1, 5}, {2.4, -2.5, 2.5, -0.4, 3.0}, true);
  const TD r = RoundStraightThrough(x);
  const std::vector<double> want = {2.0, -3.0, 3.0, -0.0, 3.0};
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.values()[i], want[i]);
  Backward(Sum(r));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(GradCheckTest, QuadraticIsExact) {
  std::mt19937_64 rng(3);
  const std::vector<TD> in = {RandomTensor<double>({1, 2, 3, 3}, rng, true)};
  const Fn f = [](std::span<const TD> t) { return Sum(Square(t[0])); };
  EXPECT_LT(GradCheck<double>(f, in, 1e-5), 1e-9);
}

TEST(GradCheckTest, ConvolutionMse) {
  std::mt19937_64 rng(4);
  const std::vector<TD> in = {RandomTensor<double>({2, 3, 7, 6}, rng, true),
                              RandomTensor<double>({4, 3, 3, 3}, rng, true),
                              RandomTensor<double>({4, 1, 1, 1}, rng, true)};
  const TD target = RandomTensor<double>({2, 4, 4, 3}, rng);
  const Fn f = [&](std::span<const TD> t) {
    return Mean(Square(Sub(Conv2d(t[0], t[1], t[2], 2), target)));
  };
  EXPECT_LT(GradCheck<double>(f, in, 1e-5), 1e-6);
}

// Every differentiable op on 10 random instances.
TEST(GradCheckTest, EveryOp) {
  const std::vector<std::pair<const char*, Fn>> ops = {
      {"add", [](std::span<const TD> t) { return Sum(Square(Add(t[0], t[1]))); }},
      {"sub", [](std::span<const TD> t) { return Sum(Square(Sub(t[0], t[1]))); }},
      {"mul", [](std::span<const TD> t) { return Sum(Mul(t[0], t[1])); }},
      {"scale", [](std::span<const TD> t) { return Sum(Square(Scale(t[0], -1.7))); }},
      {"add_scalar",
       [](std::span<const TD> t) { return Sum(Square(AddScalar(t[0], 0.3))); }},
      {"softplus", [](std::span<const TD> t) { return Sum(Mul(Softplus(t[0]), t[1])); }},
      {"concat",
       [](std::span<const TD> t) { return Sum(Square(ConcatChannels(t[0], t[1]))); }},
      {"slice",
       [](std::span<const TD> t) { return Sum(Square(SliceChannels(t[0], 1, 2))); }},
      {"crop", [](std::span<const TD> t) { return Sum(Square(CropSpatial(t[1], 2, 3))); }},
      {"mean", [](std::span<const TD> t) { return Mean(Mul(t[0], t[1])); }},
  };
  for (const auto& [name, f] : ops) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      const std::vector<TD> in = {RandomTensor<double>({1, 2, 3, 4}, rng, true),
                                  RandomTensor<double>({1, 2, 3, 4}, rng, true)};
      EXPECT_LT(GradCheck<double>(f, in, 1e-5), 1e-6) << name << " seed " << seed;
    }
  }
}

TEST(GradCheckTest, BackwardIsLinear) {
  std::mt19937_64 rng(8);
  TD x = RandomTensor<double>({1, 2, 4, 4}, rng, true);
  const TD w = RandomTensor<double>({3, 2, 3, 3}, rng);
  const TD b = RandomTensor<double>({3, 1, 1, 1}, rng);
  auto loss1 = [&] { return Mean(Square(Conv2d(x, w, b, 1))); };
  auto loss2 = [&] { return Sum(Softplus(x)); };
  const double a = 0.7, c = -2.3;
  auto grad_of = [&](const TD& loss) {
    x.ZeroGrad();
    Backward(loss);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  const auto g1 = grad_of(loss1());
  const auto g2 = grad_of(loss2());
  const auto g = grad_of(Add(Scale(loss1(), a), Scale(loss2(), c)));
  for (size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(g[i], a * g1[i] + c * g2[i], 1e-12);
  }
}

TEST(GradCheckTest, NonScalarFunctionRejected) {
  const std::vector<TD> in = {TD(Shape{1, 1, 1, 2}, {1.0, 2.0}, true)};
  const Fn f = [](std::span<const TD> t) { return Square(t[0]); };
  EXPECT_THROW(GradCheck<double>(f, in, 1e-5), ContractError);
}

}  // namespace
}  // namespace gdc
