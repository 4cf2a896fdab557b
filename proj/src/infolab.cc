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

#include "gdc/infolab.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "gdc/error.h"

namespace gdc {

namespace {

// -p log2(p / q) with the 0 log 0 = 0 convention.
double Term(double p, double q) { return p > 0 ? -p * std::log2(p / q) : 0.0; }

void ValidateTable(const JointTable& t) {
  if (t.rows <= 0 || t.cols <= 0 ||
      static_cast<int64_t>(t.p.size()) != t.rows * t.cols) {
    throw ContractError("joint table size does not match its dimensions");
  }
  ValidatePmf(t.p);
}

void ValidateMap(const DiscreteJoint& joint, const BottleneckMap& map) {
  if (map.image.size() != joint.alphabet_xt.size()) {
    throw ContractError("bottleneck map must be total on the prediction alphabet");
  }
  for (int64_t v : map.image) {
    if (v < 0 || v >= map.codomain) {
      throw ContractError("bottleneck map label outside its codomain");
    }
  }
}

// q(x, y~) = sum over x~ with f(x~) = y~.
JointTable XGivenMapJoint(const DiscreteJoint& joint, const BottleneckMap& map) {
  const JointTable& t = joint.table;
  JointTable q{t.rows, map.codomain, std::vector<double>(t.rows * map.codomain, 0.0)};
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) {
      q.p[i * map.codomain + map.image[j]] += t.at(i, j);
    }
  }
  return q;
}

// H(row | col) of a table.
double RowGivenCol(const JointTable& t) {
  const std::vector<double> col = t.ColMarginal();
  double h = 0.0;
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) h += Term(t.at(i, j), col[j]);
  }
  return h;
}

// Sum p(a, b) log2 p(a, b) / (p(a) p(b)).
double MutualInfoBySum(const JointTable& t) {
  const std::vector<double> row = t.RowMarginal();
  const std::vector<double> col = t.ColMarginal();
  double info = 0.0;
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) {
      const double p = t.at(i, j);
      if (p > 0) info += p * std::log2(p / (row[i] * col[j]));
    }
  }
  return info;
}

[[noreturn]] void Violation(const std::string& what, const DiscreteJoint& joint) {
  throw IdentityViolation(what + "\n" + DescribeJoint(joint));
}

}  // namespace

std::vector<double> JointTable::RowMarginal() const {
  std::vector<double> m(rows, 0.0);
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) m[i] += at(i, j);
  }
  return m;
}

std::vector<double> JointTable::ColMarginal() const {
  std::vector<double> m(cols, 0.0);
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t j = 0; j < cols; ++j) m[j] += at(i, j);
  }
  return m;
}

void DiscreteJoint::Validate() const {
  if (static_cast<int64_t>(alphabet_x.size()) != table.rows ||
      static_cast<int64_t>(alphabet_xt.size()) != table.cols) {
    throw ContractError("alphabet sizes do not match the joint table");
  }
  for (const auto* a : {&alphabet_x, &alphabet_xt}) {
    std::vector<double> sorted = *a;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ContractError("alphabet symbols must be distinct");
    }
    for (double v : sorted) {
      if (!std::isfinite(v)) throw ContractError("alphabet symbols must be finite");
    }
  }
  ValidateTable(table);
}

bool BottleneckMap::Injective() const {
  std::vector<int64_t> sorted = image;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

void ValidatePmf(std::span<const double> pmf) {
  if (pmf.empty()) throw ContractError("empty pmf");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ContractError("pmf entries must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "pmf sums to " << total;
    throw ContractError(os.str());
  }
}

double Entropy(std::span<const double> pmf) {
  ValidatePmf(pmf);
  double h = 0.0;
  for (double p : pmf) h += Term(p, 1.0);
  return h;
}

double JointEntropy(const JointTable& joint) {
  ValidateTable(joint);
  return Entropy(joint.p);
}

double CondEntropy(const DiscreteJoint& joint, CondDirection direction) {
  joint.Validate();
  const JointTable& t = joint.table;
  if (direction == CondDirection::kXGivenXt) return RowGivenCol(t);
  JointTable transposed{t.cols, t.rows, std::vector<double>(t.p.size())};
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) transposed.p[j * t.rows + i] = t.at(i, j);
  }
  return RowGivenCol(transposed);
}

double MutualInfo(const JointTable& joint) {
  ValidateTable(joint);
  const double info =
      Entropy(joint.RowMarginal()) + Entropy(joint.ColMarginal()) - Entropy(joint.p);
  if (info < -kNonNegativeTolerance) {
    throw IdentityViolation("negative mutual information");
  }
  return std::max(info, 0.0);
}

ResidualDistribution Residual(const DiscreteJoint& joint) {
  joint.Validate();
  for (const auto* a : {&joint.alphabet_x, &joint.alphabet_xt}) {
    for (double v : *a) {
      if (v != std::round(v)) throw ContractError("residuals need integer alphabets");
    }
  }
  std::map<double, int64_t> index;
  for (double x : joint.alphabet_x) {
    for (double xt : joint.alphabet_xt) index.emplace(x - xt, 0);
  }
  ResidualDistribution out;
  for (auto& [value, idx] : index) {
    idx = static_cast<int64_t>(out.support.size());
    out.support.push_back(value);
  }
  const JointTable& t = joint.table;
  const int64_t n = static_cast<int64_t>(out.support.size());
  out.pmf.assign(n, 0.0);
  out.xt_r = {t.cols, n, std::vector<double>(t.cols * n, 0.0)};
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) {
      const int64_t r = index.at(joint.alphabet_x[i] - joint.alphabet_xt[j]);
      out.pmf[r] += t.at(i, j);
      out.xt_r.p[j * n + r] += t.at(i, j);
    }
  }
  return out;
}

IdentityReport VerifyMainIdentity(const DiscreteJoint& joint) {
  const ResidualDistribution res = Residual(joint);
  IdentityReport r;
  r.h_r = Entropy(res.pmf);
  r.h_x_given_xt = CondEntropy(joint, CondDirection::kXGivenXt);
  r.i_xt_r = MutualInfoBySum(res.xt_r);
  r.residual_abs = std::abs(r.h_r - r.h_x_given_xt - r.i_xt_r);
  r.equality = r.i_xt_r <= kNonNegativeTolerance;
  if (r.residual_abs > kIdentityTolerance) {
    Violation("H(R) != H(X|X~) + I(X~;R)", joint);
  }
  if (r.h_r < r.h_x_given_xt - kNonNegativeTolerance) {
    Violation("H(R) < H(X|X~)", joint);
  }
  if (r.i_xt_r < -kNonNegativeTolerance) Violation("I(X~;R) < 0", joint);
  return r;
}

BottleneckReport AnalyzeBottleneck(const DiscreteJoint& joint,
                                   const BottleneckMap& map) {
  joint.Validate();
  ValidateMap(joint, map);
  const JointTable& t = joint.table;
  const std::vector<double> pxt = t.ColMarginal();
  const JointTable q = XGivenMapJoint(joint, map);
  const std::vector<double> pyt = q.ColMarginal();

  BottleneckReport r;
  r.h_xt = Entropy(pxt);
  r.h_yt = Entropy(pyt);
  r.h_x_given_xt = RowGivenCol(t);
  r.h_x_given_yt = RowGivenCol(q);
  // p(x, x~, y~) = p(x, x~) on y~ = f(x~), and p(x~, y~) = p(x~).
  double cmi = 0.0;
  for (int64_t i = 0; i < t.rows; ++i) {
    for (int64_t j = 0; j < t.cols; ++j) {
      const double p = t.at(i, j);
      if (p <= 0) continue;
      const int64_t k = map.image[j];
      cmi += p * std::log2(p * pyt[k] / (q.at(i, k) * pxt[j]));
    }
  }
  r.i_x_xt_given_yt = cmi;
  const ResidualDistribution res = Residual(joint);
  r.i_xt_r = MutualInfoBySum(res.xt_r);
  r.h_r = Entropy(res.pmf);
  r.injective = map.Injective();
  return r;
}

BottleneckReport VerifyBottleneck(const DiscreteJoint& joint,
                                  const BottleneckMap& map) {
  VerifyMainIdentity(joint);
  const BottleneckReport r = AnalyzeBottleneck(joint, map);
  if (r.h_xt < r.h_yt - kNonNegativeTolerance) Violation("H(X~) < H(Y~)", joint);
  if (r.h_x_given_xt > r.h_x_given_yt + kNonNegativeTolerance) {
    Violation("H(X|X~) > H(X|Y~)", joint);
  }
  if (r.i_x_xt_given_yt < -kNonNegativeTolerance) {
    Violation("I(X;X~|Y~) < 0", joint);
  }
  if (std::abs(r.h_x_given_xt - (r.h_x_given_yt - r.i_x_xt_given_yt)) >
      kIdentityTolerance) {
    Violation("H(X|X~) != H(X|Y~) - I(X;X~|Y~)", joint);
  }
  if (std::abs(r.h_r - (r.h_x_given_yt - r.i_x_xt_given_yt + r.i_xt_r)) >
      kIdentityTolerance) {
    Violation("H(R) != H(X|Y~) - I(X;X~|Y~) + I(X~;R)", joint);
  }
  if (r.injective && r.i_x_xt_given_yt > kNonNegativeTolerance) {
    Violation("injective map with I(X;X~|Y~) > 0", joint);
  }
  return r;
}

BottleneckMap Compose(const BottleneckMap& first, const BottleneckMap& second) {
  if (static_cast<int64_t>(second.image.size()) != first.codomain) {
    throw ContractError("cannot compose: codomain/domain mismatch");
  }
  BottleneckMap out{{}, second.codomain};
  out.image.reserve(first.image.size());
  for (int64_t v : first.image) out.image.push_back(second.image[v]);
  return out;
}

namespace {

std::vector<double> Iota(int64_t n) {
  std::vector<double> a(n);
  std::iota(a.begin(), a.end(), 0.0);
  return a;
}

void Normalize(std::vector<double>& p) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
}

}  // namespace

DiscreteJoint RandomJoint(int64_t size_x, int64_t size_xt, std::mt19937_64& rng) {
  if (size_x <= 0 || size_xt <= 0) throw ContractError("alphabet sizes must be positive");
  std::exponential_distribution<double> gamma1(1.0);
  std::bernoulli_distribution drop(0.2);
  std::vector<double> p(size_x * size_xt);
  double total = 0.0;
  for (double& v : p) {
    v = drop(rng) ? 0.0 : gamma1(rng);
    total += v;
  }
  if (total == 0.0) p[std::uniform_int_distribution<size_t>(0, p.size() - 1)(rng)] = 1.0;
  Normalize(p);
  return {Iota(size_x), Iota(size_xt), {size_x, size_xt, std::move(p)}};
}

DiscreteJoint AdditiveNoiseJoint(int64_t size, double noise, std::mt19937_64& rng) {
  if (size <= 0 || noise < 0 || noise > 1) {
    throw ContractError("additive-noise joint needs size > 0, noise in [0, 1]");
  }
  std::exponential_distribution<double> gamma1(1.0);
  std::vector<double> px(size);
  for (double& v : px) v = gamma1(rng);
  Normalize(px);
  // x~ = x + n, n in {-1, 0, 1}; prediction alphabet {-1, ..., size}.
  const int64_t cols = size + 2;
  std::vector<double> p(size * cols, 0.0);
  const double pn[3] = {noise / 2, 1 - noise, noise / 2};
  for (int64_t i = 0; i < size; ++i) {
    for (int n = 0; n < 3; ++n) p[i * cols + i + n] += px[i] * pn[n];
  }
  Normalize(p);
  std::vector<double> axt(cols);
  std::iota(axt.begin(), axt.end(), -1.0);
  return {Iota(size), std::move(axt), {size, cols, std::move(p)}};
}

DiscreteJoint PerfectPredictionJoint(std::span<const double> pmf) {
  ValidatePmf(pmf);
  const int64_t n = static_cast<int64_t>(pmf.size());
  std::vector<double> p(n * n, 0.0);
  for (int64_t i = 0; i < n; ++i) p[i * n + i] = pmf[i];
  return {Iota(n), Iota(n), {n, n, std::move(p)}};
}

DiscreteJoint IndependentJoint(std::span<const double> px, std::span<const double> pxt) {
  ValidatePmf(px);
  ValidatePmf(pxt);
  const int64_t a = static_cast<int64_t>(px.size());
  const int64_t b = static_cast<int64_t>(pxt.size());
  std::vector<double> p(a * b);
  for (int64_t i = 0; i < a; ++i) {
    for (int64_t j = 0; j < b; ++j) p[i * b + j] = px[i] * pxt[j];
  }
  return {Iota(a), Iota(b), {a, b, std::move(p)}};
}

BottleneckMap RandomMap(int64_t domain, std::mt19937_64& rng) {
  const int64_t codomain = std::uniform_int_distribution<int64_t>(1, domain)(rng);
  std::vector<int64_t> image(domain);
  // Every label is hit at least once.
  for (int64_t i = 0; i < domain; ++i) {
    image[i] = i < codomain ? i
                            : std::uniform_int_distribution<int64_t>(0, codomain - 1)(rng);
  }
  std::shuffle(image.begin(), image.end(), rng);
  return {std::move(image), codomain};
}

BottleneckMap IdentityMap(int64_t domain) {
  std::vector<int64_t> image(domain);
  std::iota(image.begin(), image.end(), 0);
  return {std::move(image), domain};
}

BottleneckMap ConstantMap(int64_t domain) {
  return {std::vector<int64_t>(domain, 0), 1};
}

std::string DescribeJoint(const DiscreteJoint& joint) {
  std::ostringstream os;
  os.precision(17);
  os << "x:";
  for (double v : joint.alphabet_x) os << ' ' << v;
  os << "\nx~:";
  for (double v : joint.alphabet_xt) os << ' ' << v;
  for (int64_t i = 0; i < joint.table.rows; ++i) {
    os << "\n";
    for (int64_t j = 0; j < joint.table.cols; ++j) {
      os << (j ? " " : "") << joint.table.at(i, j);
    }
  }
  return os.str();
}

std::vector<InfoLabRow> RunInfoLabSweep(int64_t cases, int64_t maps_per_case,
                                        int64_t max_alphabet, uint64_t seed) {
  if (max_alphabet < 3) throw ContractError("max alphabet must be at least 3");
  std::mt19937_64 rng(seed);
  std::vector<InfoLabRow> rows;
  for (int64_t c = 0; c < cases; ++c) {
    DiscreteJoint joint;
    std::string generator;
    switch (c % 3) {
      case 0: {
        std::uniform_int_distribution<int64_t> size(1, max_alphabet);
        const int64_t a = size(rng);
        joint = RandomJoint(a, size(rng), rng);
        generator = "dirichlet";
        break;
      }
      case 1: {
        const int64_t a =
            std::uniform_int_distribution<int64_t>(1, max_alphabet - 2)(rng);
        joint = AdditiveNoiseJoint(a, std::uniform_real_distribution<double>(0, 1)(rng), rng);
        generator = "additive";
        break;
      }
      default: {
        const int64_t a = std::uniform_int_distribution<int64_t>(1, max_alphabet)(rng);
        std::vector<double> p(a);
        std::exponential_distribution<double> gamma1(1.0);
        for (double& v : p) v = gamma1(rng);
        Normalize(p);
        joint = PerfectPredictionJoint(p);
        generator = "perfect";
        break;
      }
    }
    const int64_t domain = static_cast<int64_t>(joint.alphabet_xt.size());
    std::vector<BottleneckMap> maps = {IdentityMap(domain), ConstantMap(domain)};
    for (int64_t m = 0; m < maps_per_case; ++m) maps.push_back(RandomMap(domain, rng));
    for (size_t m = 0; m < maps.size(); ++m) {
      InfoLabRow row;
      row.case_index = c;
      row.map_index = static_cast<int64_t>(m);
      row.generator = generator;
      row.size_x = static_cast<int64_t>(joint.alphabet_x.size());
      row.size_xt = domain;
      try {
        row.identity = VerifyMainIdentity(joint);
        row.report = VerifyBottleneck(joint, maps[m]);
        row.pass = true;
      } catch (const IdentityViolation& e) {
        row.failure = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string InfoLabCsvHeader() {
  return "case,map,generator,size_x,size_xt,H_R,H_X_given_Xt,I_Xt_R,identity_residual,"
         "equality,H_Xt,H_Yt,H_X_given_Yt,I_X_Xt_given_Yt,injective,pass";
}

std::string InfoLabCsvLine(const InfoLabRow& row) {
  std::ostringstream os;
  os.precision(12);
  const auto& r = row.report;
  os << row.case_index << ',' << row.map_index << ',' << row.generator << ','
     << row.size_x << ',' << row.size_xt << ',' << row.identity.h_r << ','
     << row.identity.h_x_given_xt << ',' << row.identity.i_xt_r << ','
     << row.identity.residual_abs << ',' << (row.identity.equality ? 1 : 0) << ','
     << r.h_xt << ',' << r.h_yt << ',' << r.h_x_given_yt << ','
     << r.i_x_xt_given_yt << ',' << (r.injective ? 1 : 0) << ','
     << (row.pass ? 1 : 0);
  return os.str();
}

}  // namespace gdc
