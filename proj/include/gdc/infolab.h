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

// Exact information measures on small discrete sources, used to check how
// residual coding relates to conditional coding:
//
//   H(X - X~) = H(X | X~) + I(X~; R)
//   H(X - X~) = H(X | Y~) - I(X; X~ | Y~) + I(X~; R),   Y~ = f(X~)
//
// All quantities are in bits and computed by enumeration in double.

#ifndef GDC_INFOLAB_H_
#define GDC_INFOLAB_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gdc {

inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kNonNegativeTolerance = 1e-12;

// Row-major table p(a, b).
struct JointTable {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> p;

  double at(int64_t a, int64_t b) const { return p[a * cols + b]; }
  std::vector<double> RowMarginal() const;
  std::vector<double> ColMarginal() const;
};

// p(x, x~) over explicit alphabets; rows index X, columns index X~.
struct DiscreteJoint {
  std::vector<double> alphabet_x;
  std::vector<double> alphabet_xt;
  JointTable table;

  // Throws ContractError unless the table is a pmf over distinct symbols.
  void Validate() const;
};

// f: index into alphabet_xt -> codomain label in [0, codomain).
struct BottleneckMap {
  std::vector<int64_t> image;
  int64_t codomain = 0;

  bool Injective() const;
};

// Throws ContractError on negative entries or a sum off 1 by more than 1e-12.
void ValidatePmf(std::span<const double> pmf);

double Entropy(std::span<const double> pmf);
double JointEntropy(const JointTable& joint);

enum class CondDirection { kXGivenXt, kXtGivenX };
double CondEntropy(const DiscreteJoint& joint, CondDirection direction);

// I(A; B) = H(A) + H(B) - H(A, B), clamped at 0 only within 1e-12.
double MutualInfo(const JointTable& joint);

struct ResidualDistribution {
  std::vector<double> support;  // Sorted residual values.
  std::vector<double> pmf;
  JointTable xt_r;  // Rows index X~, columns index support.
};

// Push-forward of p(x, x~) through r = x - x~. Alphabets must be integral.
ResidualDistribution Residual(const DiscreteJoint& joint);

struct IdentityReport {
  double h_r = 0.0;
  double h_x_given_xt = 0.0;
  double i_xt_r = 0.0;
  double residual_abs = 0.0;
  bool equality = false;  // I(X~; R) vanishes.
};

// Throws IdentityViolation (with a dump of the joint) if the decomposition
// or H(R) >= H(X | X~) fails.
IdentityReport VerifyMainIdentity(const DiscreteJoint& joint);

struct BottleneckReport {
  double h_xt = 0.0;
  double h_yt = 0.0;
  double h_x_given_xt = 0.0;
  double h_x_given_yt = 0.0;
  double i_x_xt_given_yt = 0.0;
  double i_xt_r = 0.0;
  double h_r = 0.0;
  bool injective = false;
};

BottleneckReport AnalyzeBottleneck(const DiscreteJoint& joint,
                                   const BottleneckMap& map);

// Computes the report and checks every relation among its fields; throws
// IdentityViolation on the first failure.
BottleneckReport VerifyBottleneck(const DiscreteJoint& joint,
                                  const BottleneckMap& map);

// x~ -> second(first(x~)).
BottleneckMap Compose(const BottleneckMap& first, const BottleneckMap& second);

// Source generators over consecutive integer alphabets.
DiscreteJoint RandomJoint(int64_t size_x, int64_t size_xt, std::mt19937_64& rng);
// x~ = x + n, n in {-1, 0, 1} with P(n != 0) = |noise|; X~ spans -1..size.
DiscreteJoint AdditiveNoiseJoint(int64_t size, double noise, std::mt19937_64& rng);
DiscreteJoint PerfectPredictionJoint(std::span<const double> pmf);
DiscreteJoint IndependentJoint(std::span<const double> px, std::span<const double> pxt);
BottleneckMap RandomMap(int64_t domain, std::mt19937_64& rng);
BottleneckMap IdentityMap(int64_t domain);
BottleneckMap ConstantMap(int64_t domain);

std::string DescribeJoint(const DiscreteJoint& joint);

struct InfoLabRow {
  int64_t case_index = 0;
  int64_t map_index = 0;
  std::string generator;
  int64_t size_x = 0;
  int64_t size_xt = 0;
  BottleneckReport report;
  IdentityReport identity;
  bool pass = false;
  std::string failure;
};

// |cases| joints (cycling through the random, additive-noise and perfect
// prediction generators) times |maps_per_case| random maps each, plus the
// identity and constant maps. Failures are recorded, not thrown.
std::vector<InfoLabRow> RunInfoLabSweep(int64_t cases, int64_t maps_per_case,
                                        int64_t max_alphabet, uint64_t seed);

std::string InfoLabCsvHeader();
std::string InfoLabCsvLine(const InfoLabRow& row);

}  // namespace gdc

#endif  // GDC_INFOLAB_H_
