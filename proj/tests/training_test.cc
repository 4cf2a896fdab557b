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

#include "gdc/coders.h"
#include "gdc/error.h"
#include "gdc/evaluation.h"
#include "gdc/io.h"
#include "gdc/layers.h"
#include "gdc/ops.h"
#include "gdc/training.h"
#include "test_util.h"

namespace gdc {
namespace {

using testing::BitEqual;
using testing::SmallConfig;
using TD = Tensor<double>;
using TF = Tensor<float>;

// Frame pair whose PSNR is |db| (a constant offset on every sample).
FramePair<double> PairAtPsnr(double db) {
  const Shape s{1, 3, 10, 100};
  const TD x = TD::Full(s, 0.5);
  const double delta = std::sqrt(std::pow(10.0, -db / 10.0));
  return {x, AddScalar(x, delta)};
}

// Exactly 30 dB: three unit errors among 3000 samples give MSE = fl(1e-3).
FramePair<double> PairAtExactly30() {
  const Shape s{1, 3, 10, 100};
  TD x(s);
  TD xt(s);
  for (int i : {0, 1000, 2000}) xt.mutable_values()[i] = 1.0;
  return {x, xt};
}

std::vector<Tensor<float>> Images(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor<float>> images;
  for (int i = 0; i < count; ++i) images.push_back(SyntheticImage<float>(64, 64, rng));
  return images;
}

// Gradient |g| on every element of p (loss = sum(g * p)).
void SetGrad(const TD& p, double g) {
  Backward(Sum(Scale(p, g)));
}

TEST(RdLossTest, WorkedValues) {
  const Shape s{1, 3, 16, 16};
  const TD x = TD::Full(s, 0.25);
  const TD x_hat = AddScalar(x, 10.0 / 255.0);  // MSE_255 = 100.
  const TD rate = TD::Scalar(0.05 * 256);
  EXPECT_NEAR(RdLoss(x, x_hat, rate, 1024, 256).item(), 151.2, 1e-9);
  EXPECT_EQ(RdLoss(x, x, TD::Scalar(0.0), 1024, 256).item(), 0.0);
  EXPECT_THROW(RdLoss(x, TD(Shape{1, 3, 8, 8}), rate, 1024, 256), DimensionError);
}

TEST(AdamTest, FirstStepAndZeroGradient) {
  ParamStore<double> params;
  // Copies share storage with the store; references would not survive Add.
  TD p = params.Add("p", TD(Shape{1, 1, 1, 3}, {1.0, -2.0, 0.5}, true));
  TD q = params.Add("q", TD(Shape{1, 1, 1, 1}, {3.0}, true));
  Adam<double> adam(params, AdamConfig{.learning_rate = 1e-4});
  SetGrad(p, 1.0);
  adam.Step();
  for (size_t i = 0; i < 3; ++i) {
    const double delta = std::vector<double>{1.0, -2.0, 0.5}[i] - p.values()[i];
    EXPECT_GE(delta, 0.99e-4);
    EXPECT_LE(delta, 1.0e-4);
  }
  EXPECT_EQ(q.values()[0], 3.0);
}

TEST(AdamTest, TwoStepRecurrence) {
  ParamStore<double> params;
  TD& p = params.Add("p", TD(Shape{1, 1, 1, 1}, {1.0}, true));
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Adam<double> adam(params, AdamConfig{lr, b1, b2, eps});
  const double g1 = 0.3, g2 = -0.7;
  SetGrad(p, g1);
  adam.Step();
  params.ZeroGrad();
  SetGrad(p, g2);
  adam.Step();
  // Hand-evaluated recurrence.
  double w = 1.0, m = 0, v = 0;
  m = b1 * m + (1 - b1) * g1;
  v = b2 * v + (1 - b2) * g1 * g1;
  w -= lr * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps);
  m = b1 * m + (1 - b1) * g2;
  v = b2 * v + (1 - b2) * g2 * g2;
  w -= lr * (m / (1 - b1 * b1)) / (std::sqrt(v / (1 - b2 * b2)) + eps);
  EXPECT_NEAR(p.values()[0], w, 1e-12);
  EXPECT_EQ(adam.step(), 2);
}

TEST(AdamTest, NonFiniteGradientRejected) {
  ParamStore<double> params;
  TD& p = params.Add("p", TD(Shape{1, 1, 1, 2}, {1.0, 2.0}, true));
  Adam<double> adam(params);
  SetGrad(p, std::nan(""));
  EXPECT_THROW(adam.Step(), NumericError);
  EXPECT_EQ(p.values()[0], 1.0);
  EXPECT_EQ(adam.step(), 0);
}

TEST(TargetRuleTest, Threshold) {
  EXPECT_EQ(SelectXgdcTarget(PairAtPsnr(35).x, PairAtPsnr(35).x_tilde), TrainTarget::kD);
  EXPECT_EQ(SelectXgdcTarget(PairAtPsnr(25).x, PairAtPsnr(25).x_tilde), TrainTarget::kG);
  const FramePair<double> exact = PairAtExactly30();
  ASSERT_EQ(Psnr(exact.x_tilde, exact.x), 30.0);
  EXPECT_EQ(SelectXgdcTarget(exact.x, exact.x_tilde), TrainTarget::kG);
}

TEST(PairTest, IdentityPair) {
  const auto images = Images(1, 1);
  const FramePair<float> p = MakePair(images[0], PairConfig{}, 3);
  EXPECT_TRUE(BitEqual(p.x, p.x_tilde));
  EXPECT_EQ(Psnr(p.x_tilde, p.x), kPsnrCap);
}

TEST(PairTest, IntegerTranslation) {
  const auto images = Images(1, 2);
  PairConfig c;
  c.shift_x = 2;
  c.integer_shift = true;
  const FramePair<float> p = MakePair(images[0], c, 4);
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t r = 0; r < c.patch; ++r)
      for (int64_t col = 0; col + 2 < c.patch; ++col) {
        EXPECT_EQ(p.x_tilde.at(0, ch, r, col), p.x.at(0, ch, r, col + 2));
      }
}

TEST(PairTest, TooSmallImage) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(MakePair(SyntheticImage<float>(16, 16, rng), PairConfig{}, 1), ContractError);
}

TEST(PairTest, CalibratedDegradation) {
  const auto images = Images(4, 5);
  PairConfig c;
  c.max_shift = 0.0;
  const double step = CalibrateDegradeStep<float>(images, c, 40, 35.0, 9);
  c.degrade_step = step;
  double total = 0;
  const int n = 40;
  for (int i = 0; i < n; ++i) {
    PairConfig clean = c;
    clean.degrade_step = 0;
    const uint64_t seed = 1000 + i;
    const auto reference = MakePair(images[i % images.size()], clean, seed);
    const auto degraded = MakePair(images[i % images.size()], c, seed);
    total += Psnr(degraded.x_tilde, reference.x_tilde);
  }
  EXPECT_GE(total / n, 34.0);
  EXPECT_LE(total / n, 36.0);
}

TEST(PairTest, CorpusStraddlesThreshold) {
  const auto images = Images(4, 6);
  PairConfig c;
  c.degrade_step = 0.06;
  const auto pairs = BuildPairCorpus<float>(images, 40, c, 7);
  int above = 0;
  for (const auto& p : pairs) above += Psnr(p.x_tilde, p.x) > kTargetThresholdDb;
  EXPECT_GT(above, 0);
  EXPECT_LT(above, 40);
}

TEST(TrainTest, ZeroSteps) {
  Coder<float> coder(SmallConfig(CoderKind::kDiff), 1);
  const auto before = coder.params().entries();
  std::vector<std::vector<float>> saved;
  for (const auto& [n, t] : before) saved.emplace_back(t.values().begin(), t.values().end());
  Adam<float> adam(coder.params());
  const TrainStats s = TrainEpoch<float>(coder, adam, {}, TrainConfig{});
  EXPECT_EQ(s.steps, 0);
  EXPECT_TRUE(s.losses.empty());
  for (size_t i = 0; i < saved.size(); ++i) {
    const auto v = coder.params().entries()[i].second.values();
    EXPECT_TRUE(std::equal(v.begin(), v.end(), saved[i].begin()));
  }
}

TEST(TrainTest, LambdaMenu) {
  TrainConfig c;
  c.lambda = 1000;
  EXPECT_THROW(c.Validate(), ContractError);
  c.allow_custom_lambda = true;
  EXPECT_NO_THROW(c.Validate());
}

TEST(TrainTest, SeededDeterminismAndRateConsistency) {
  const auto images = Images(2, 8);
  PairConfig pc;
  pc.degrade_step = 0.05;
  const auto pairs = BuildPairCorpus<float>(images, 6, pc, 9);
  TrainConfig tc;
  tc.steps = 12;
  tc.seed = 4;
  tc.learning_rate = 1e-3;
  auto run = [&] {
    Coder<float> coder(SmallConfig(CoderKind::kXgdc), 2);
    Adam<float> adam(coder.params(), AdamConfig{.learning_rate = tc.learning_rate});
    const TrainStats s = TrainEpoch<float>(coder, adam, pairs, tc);
    return std::make_pair(SerializeCheckpoint(coder.params()), s);
  };
  const auto [a, sa] = run();
  const auto [b, sb] = run();
  EXPECT_EQ(a, b);
  double mean = 0;
  for (double v : sa.bpps) mean += v;
  EXPECT_NEAR(sa.mean_bpp, mean / static_cast<double>(sa.bpps.size()), 1e-9);
}

TEST(TrainTest, ModeRuleMatchesPsnr) {
  const auto images = Images(2, 10);
  PairConfig pc;
  pc.degrade_step = 0.06;
  const auto pairs = BuildPairCorpus<float>(images, 16, pc, 11);
  const Coder<float> coder(SmallConfig(CoderKind::kXgdc), 3);
  int d = 0;
  for (const auto& p : pairs) {
    const auto out = coder.Forward(p.x, p.x_tilde, QuantMode::kRound);
    bool is_d = false;
    const TF& rec = TrainedReconstruction(out, p, CoderKind::kXgdc, 30.0, &is_d);
    EXPECT_EQ(is_d, Psnr(p.x_tilde, p.x) > 30.0);
    EXPECT_EQ(&rec, is_d ? &*out.x_hat_d : &*out.x_hat_g);
    d += is_d;
  }
  EXPECT_GT(d, 0);
  EXPECT_LT(d, 16);
}

TEST(TrainTest, IdentityGdcEvaluatesLikeDiff) {
  const auto images = Images(2, 12);
  PairConfig pc;
  pc.degrade_step = 0.05;
  const auto pairs = BuildPairCorpus<float>(images, 6, pc, 13);
  const Coder<float> diff(SmallConfig(CoderKind::kDiff), 5);
  const Coder<float> gdc(SmallConfig(CoderKind::kGdc), 5);
  const EvalStats a = EvaluateRd<float>(diff, pairs, 1024);
  const EvalStats b = EvaluateRd<float>(gdc, pairs, 1024);
  EXPECT_EQ(a.mean_loss, b.mean_loss);
  EXPECT_EQ(a.mean_bpp, b.mean_bpp);
  EXPECT_EQ(a.mean_psnr, b.mean_psnr);
}

TEST(TrainTest, OverfitSinglePair) {
  const auto images = Images(1, 14);
  PairConfig pc;
  pc.max_shift = 1.0;
  pc.degrade_step = 0.05;
  const std::vector<FramePair<float>> pair = {MakePair(images[0], pc, 15)};
  Coder<float> coder(SmallConfig(CoderKind::kDiff), 6);
  Adam<float> adam(coder.params(), AdamConfig{.learning_rate = 1e-3});
  TrainConfig tc;
  tc.steps = 2000;
  const TrainStats s = TrainEpoch<float>(coder, adam, pair, tc);
  const int windows = 4;
  const int64_t w = tc.steps / windows;
  double previous = INFINITY;
  for (int k = 0; k < windows; ++k) {
    double mean = 0;
    for (int64_t i = k * w; i < (k + 1) * w; ++i) mean += s.losses[i] / static_cast<double>(w);
    EXPECT_LT(mean, previous) << "window " << k;
    previous = mean;
  }
}

}  // namespace
}  // namespace gdc
