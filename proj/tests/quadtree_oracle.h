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

// Exhaustive quad-tree enumeration, independent of the library search.

#ifndef GDC_TESTS_QUADTREE_ORACLE_H_
#define GDC_TESTS_QUADTREE_ORACLE_H_

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "gdc/tensor.h"

namespace gdc::testing {

struct QuadTreeInstance {
  Tensor<double> x;
  Tensor<double> d;
  Tensor<double> g;
  double lambda = 0.0;
};

// 16x16 frame where each 4x4 cell favours d or g by a random margin, so the
// optimum mixes splits, merges and both modes.
inline QuadTreeInstance RandomQuadTreeInstance(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Shape s{1, 3, 16, 16};
  std::vector<double> x(s.numel()), d(s.numel()), g(s.numel());
  std::vector<double> cell_d(16), cell_g(16);
  for (int c = 0; c < 16; ++c) {
    cell_d[c] = 0.002 + 0.03 * u(rng);
    cell_g[c] = 0.002 + 0.03 * u(rng);
  }
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t r = 0; r < 16; ++r)
      for (int64_t c = 0; c < 16; ++c) {
        const int64_t i = (ch * 16 + r) * 16 + c;
        const int cell = static_cast<int>((r / 4) * 4 + c / 4);
        x[i] = u(rng);
        d[i] = x[i] + cell_d[cell] * (2 * u(rng) - 1);
        g[i] = x[i] + cell_g[cell] * (2 * u(rng) - 1);
      }
  const double lambdas[] = {0.0, 1.0, 16.0, 64.0, 256.0, 1024.0, 8192.0};
  return {Tensor<double>(s, x), Tensor<double>(s, d), Tensor<double>(s, g),
          lambdas[seed % 7]};
}

// Costs of every tree rooted at (x0, y0, size): a leaf in either mode
// (split flag when size > min, then one mode bit) or, above min_block, a
// split flag plus any combination of the four children's trees.
inline std::vector<double> AllSubtreeCosts(const QuadTreeInstance& in, int64_t x0,
                                           int64_t y0, int64_t size, int64_t min_block) {
  const Shape& s = in.x.shape();
  auto sse = [&](const Tensor<double>& rec) {
    double acc = 0;
    for (int64_t ch = 0; ch < s.c; ++ch)
      for (int64_t r = y0; r < std::min(y0 + size, s.h); ++r)
        for (int64_t c = x0; c < std::min(x0 + size, s.w); ++c) {
          const double e = 255.0 * (rec.at(0, ch, r, c) - in.x.at(0, ch, r, c));
          acc += e * e;
        }
    return acc;
  };
  const double flag = size > min_block ? 1.0 : 0.0;
  std::vector<double> costs = {sse(in.d) + in.lambda * (flag + 1),
                               sse(in.g) + in.lambda * (flag + 1)};
  if (size == min_block) return costs;
  const int64_t h = size / 2;
  std::vector<double> combos = {in.lambda};  // The split flag.
  for (auto [dx, dy] : {std::pair<int64_t, int64_t>{0, 0}, {h, 0}, {0, h}, {h, h}}) {
    const std::vector<double> child = AllSubtreeCosts(in, x0 + dx, y0 + dy, h, min_block);
    std::vector<double> next;
    next.reserve(combos.size() * child.size());
    for (double a : combos)
      for (double b : child) next.push_back(a + b);
    combos = std::move(next);
  }
  costs.insert(costs.end(), combos.begin(), combos.end());
  return costs;
}

// Minimum over every partition and labelling of a frame whose sides are
// multiples of max_block.
inline double BruteForceQuadTreeCost(const QuadTreeInstance& in, int64_t min_block,
                                     int64_t max_block) {
  const Shape& s = in.x.shape();
  double total = 0;
  for (int64_t y = 0; y < s.h; y += max_block)
    for (int64_t x = 0; x < s.w; x += max_block) {
      const auto costs = AllSubtreeCosts(in, x, y, max_block, min_block);
      total += *std::min_element(costs.begin(), costs.end());
    }
  return total;
}

}  // namespace gdc::testing

#endif  // GDC_TESTS_QUADTREE_ORACLE_H_
