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
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gdc/error.h"
#include "gdc/infolab.h"

namespace gdc {
namespace {

DiscreteJoint MakeJoint(std::vector<double> ax, std::vector<double> axt,
                        std::vector<double> p) {
  DiscreteJoint j;
  j.table.rows = static_cast<int64_t>(ax.size());
  j.table.cols = static_cast<int64_t>(axt.size());
  j.alphabet_x = std::move(ax);
  j.alphabet_xt = std::move(axt);
  j.table.p = std::move(p);
  return j;
}

// -sum p log2 p written out independently of the library.
double H(const std::vector<double>& p) {
  double h = 0;
  for (double v : p) {
    if (v > 0) h -= v * std::log2(v);
  }
  return h;
}

const std::vector<double> kUniformBinary = {0.5, 0.5};

TEST(EntropyTest, WorkedValues) {
  EXPECT_DOUBLE_EQ(Entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 2.0);
  EXPECT_DOUBLE_EQ(Entropy(std::vector<double>{0.5, 0.25, 0.25}), 1.5);
  EXPECT_THROW(Entropy(std::vector<double>{0.5, 0.6}), ContractError);
  EXPECT_THROW(Entropy(std::vector<double>{1.5, -0.5}), ContractError);
}

TEST(EntropyTest, RandomPmfMatchesDirectSum) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> g(1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> p(2 + t % 7);
    double s = 0;
    for (double& v : p) s += v = g(rng);
    for (double& v : p) v /= s;
    EXPECT_NEAR(Entropy(p), H(p), 1e-12);
  }
}

TEST(CondEntropyTest, WorkedValues) {
  const DiscreteJoint same = PerfectPredictionJoint(kUniformBinary);
  EXPECT_NEAR(CondEntropy(same, CondDirection::kXGivenXt), 0.0, 1e-15);
  const DiscreteJoint indep = IndependentJoint(kUniformBinary, kUniformBinary);
  EXPECT_NEAR(CondEntropy(indep, CondDirection::kXGivenXt), 1.0, 1e-15);
  // Rows are x, columns x~: p(0,0) = .5, p(1,0) = .25, p(1,1) = .25.
  const DiscreteJoint j = MakeJoint({0, 1}, {0, 1}, {0.5, 0.0, 0.25, 0.25});
  EXPECT_NEAR(CondEntropy(j, CondDirection::kXGivenXt), 0.688722, 1e-6);
  EXPECT_NEAR(CondEntropy(j, CondDirection::kXGivenXt), 0.75 * H({2.0 / 3, 1.0 / 3}), 1e-12);
  EXPECT_NEAR(CondEntropy(j, CondDirection::kXtGivenX), 0.5, 1e-12);
}

TEST(MutualInfoTest, WorkedValues) {
  EXPECT_NEAR(MutualInfo(IndependentJoint(kUniformBinary, kUniformBinary).table), 0.0,
              1e-15);
  EXPECT_NEAR(MutualInfo(PerfectPredictionJoint(kUniformBinary).table), 1.0, 1e-15);
}

TEST(MutualInfoTest, RandomMatchesDefinition) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const DiscreteJoint j = RandomJoint(2 + t % 7, 2 + (t / 7) % 7, rng);
    const auto pr = j.table.RowMarginal();
    const auto pc = j.table.ColMarginal();
    double mi = 0;
    for (int64_t a = 0; a < j.table.rows; ++a)
      for (int64_t b = 0; b < j.table.cols; ++b) {
        const double p = j.table.at(a, b);
        if (p > 0) mi += p * std::log2(p / (pr[a] * pc[b]));
      }
    EXPECT_NEAR(MutualInfo(j.table), mi, 1e-12);
  }
}

TEST(ResidualTest, WorkedValues) {
  const ResidualDistribution same = Residual(PerfectPredictionJoint(kUniformBinary));
  ASSERT_EQ(same.support, (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(same.pmf, (std::vector<double>{0, 1, 0}));
  const ResidualDistribution r = Residual(IndependentJoint(kUniformBinary, kUniformBinary));
  ASSERT_EQ(r.support, (std::vector<double>{-1, 0, 1}));
  EXPECT_DOUBLE_EQ(r.pmf[0], 0.25);
  EXPECT_DOUBLE_EQ(r.pmf[1], 0.5);
  EXPECT_DOUBLE_EQ(r.pmf[2], 0.25);
}

TEST(ResidualTest, BruteForce) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const DiscreteJoint j = RandomJoint(2 + t % 7, 2 + t % 5, rng);
    std::map<double, double> want;
    for (int64_t a = 0; a < j.table.rows; ++a)
      for (int64_t b = 0; b < j.table.cols; ++b) {
        want[j.alphabet_x[a] - j.alphabet_xt[b]] += j.table.at(a, b);
      }
    const ResidualDistribution r = Residual(j);
    ASSERT_EQ(r.support.size(), want.size());
    size_t i = 0;
    for (const auto& [value, p] : want) {
      EXPECT_EQ(r.support[i], value);
      EXPECT_NEAR(r.pmf[i], p, 1e-15);
      ++i;
    }
  }
}

TEST(ResidualTest, NonIntegerAlphabet) {
  const DiscreteJoint j = MakeJoint({0, 0.5}, {0, 1}, {0.25, 0.25, 0.25, 0.25});
  EXPECT_THROW(Residual(j), ContractError);
}

TEST(MainIdentityTest, WorkedValues) {
  const IdentityReport same = VerifyMainIdentity(PerfectPredictionJoint(kUniformBinary));
  EXPECT_EQ(same.h_r, 0.0);
  EXPECT_NEAR(same.h_x_given_xt, 0.0, 1e-15);
  EXPECT_TRUE(same.equality);
  const IdentityReport r = VerifyMainIdentity(IndependentJoint(kUniformBinary, kUniformBinary));
  EXPECT_DOUBLE_EQ(r.h_r, 1.5);
  EXPECT_DOUBLE_EQ(r.h_x_given_xt, 1.0);
  EXPECT_DOUBLE_EQ(r.i_xt_r, 0.5);
  EXPECT_FALSE(r.equality);
}

TEST(BottleneckTest, IdentityMapReducesToMainIdentity) {
  std::mt19937_64 rng(4);
  const DiscreteJoint j = RandomJoint(5, 6, rng);
  const BottleneckReport b = VerifyBottleneck(j, IdentityMap(6));
  EXPECT_TRUE(b.injective);
  EXPECT_NEAR(b.i_x_xt_given_yt, 0.0, 1e-12);
  EXPECT_NEAR(b.h_x_given_yt, b.h_x_given_xt, 1e-12);
}

TEST(BottleneckTest, ConstantMapGivesChainRule) {
  std::mt19937_64 rng(5);
  const DiscreteJoint j = RandomJoint(4, 5, rng);
  const BottleneckReport b = VerifyBottleneck(j, ConstantMap(5));
  EXPECT_NEAR(b.h_x_given_yt, H(j.table.RowMarginal()), 1e-12);
  EXPECT_NEAR(b.i_x_xt_given_yt, MutualInfo(j.table), 1e-12);
  EXPECT_NEAR(b.h_yt, 0.0, 1e-15);
}

TEST(BottleneckTest, ParityOfPerfectPrediction) {
  const std::vector<double> uniform4(4, 0.25);
  const DiscreteJoint j = PerfectPredictionJoint(uniform4);
  const BottleneckMap parity{{0, 1, 0, 1}, 2};
  const BottleneckReport b = VerifyBottleneck(j, parity);
  EXPECT_NEAR(b.i_x_xt_given_yt, 1.0, 1e-12);
  EXPECT_NEAR(b.h_xt - b.h_yt, 1.0, 1e-12);  // H(X~ | Y~), f deterministic.
}

TEST(BottleneckTest, CompositionNeverDecreasesConditionalEntropy) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 40; ++t) {
    const DiscreteJoint j = RandomJoint(2 + t % 7, 8, rng);
    BottleneckMap f = IdentityMap(8);
    double previous = AnalyzeBottleneck(j, f).h_x_given_yt;
    for (int k = 0; k < 4 && f.codomain > 1; ++k) {
      f = Compose(f, RandomMap(f.codomain, rng));
      const double h = VerifyBottleneck(j, f).h_x_given_yt;
      EXPECT_GE(h, previous - 1e-12);
      previous = h;
    }
  }
}

TEST(SweepTest, AllGeneratorsPass) {
  const auto rows = RunInfoLabSweep(30, 5, 8, 11);
  EXPECT_EQ(rows.size(), 30u * 7u);
  for (const auto& row : rows) EXPECT_TRUE(row.pass) << row.failure;
  EXPECT_EQ(InfoLabCsvHeader().find('\n'), std::string::npos);
}

TEST(GeneratorTest, ValidJoints) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    EXPECT_NO_THROW(RandomJoint(1 + t % 8, 1 + t % 5, rng).Validate());
    EXPECT_NO_THROW(AdditiveNoiseJoint(2 + t % 6, 0.3, rng).Validate());
  }
  const BottleneckMap m = RandomMap(8, rng);
  EXPECT_EQ(m.image.size(), 8u);
  for (int64_t v : m.image) {
    EXPECT_GE(v, 0);
    EXPECT_LT(v, m.codomain);
  }
}

}  // namespace
}  // namespace gdc
