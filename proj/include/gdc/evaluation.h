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

// Quality and rate metrics, hybrid selection between the two xGDC
// reconstructions, and Bjontegaard delta rate.

#ifndef GDC_EVALUATION_H_
#define GDC_EVALUATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "gdc/tensor.h"

namespace gdc {

inline constexpr double kPsnrCap = 99.0;

// Peak 1 on the internal [0, 1] scale; capped at kPsnrCap.
template <typename T>
double Psnr(const Tensor<T>& a, const Tensor<T>& b);
double PsnrFromMse(double mse);

// Mean squared error on the 0-255 scale.
template <typename T>
double Mse255(const Tensor<T>& a, const Tensor<T>& b);

double Bpp(double total_bits, int64_t width, int64_t height);

template <typename T>
struct HybridCandidate {
  Tensor<T> reconstruction;
  double rate_bits = 0.0;
};

struct HybridChoice {
  size_t index = 0;
  double cost = 0.0;
};

// argmin of MSE_255 + lambda * bpp; ties go to the lower rate, then to the
// earlier candidate.
template <typename T>
HybridChoice FrameHybridSelect(std::span<const HybridCandidate<T>> candidates,
                               const Tensor<T>& x, double lambda);

enum class BlockMode : uint8_t { kD = 0, kG = 1 };

// Quad-tree partition of a frame into d/g blocks. The frame is tiled by
// max_block roots in raster order; nodes lying entirely outside the frame
// are omitted. Side information, in pre-order: one split flag at every node
// larger than min_block, then one mode bit at every leaf.
struct QuadTree {
  struct Node {
    int64_t x = 0;
    int64_t y = 0;
    int64_t size = 0;
    bool split = false;
    BlockMode mode = BlockMode::kD;  // Leaves only.
  };

  int64_t width = 0;
  int64_t height = 0;
  int64_t min_block = 4;
  int64_t max_block = 256;
  std::vector<Node> nodes;  // Pre-order.

  int64_t SideBits() const;
  std::vector<bool> Serialize() const;
  static QuadTree Deserialize(const std::vector<bool>& bits, int64_t width,
                              int64_t height, int64_t min_block, int64_t max_block);
  // Row-major per-pixel mode.
  std::vector<BlockMode> ModeMap() const;
  double ModeFraction(BlockMode mode) const;
};

// Throws ContractError unless 4 <= min <= max <= 256, both powers of two.
void ValidateBlockRange(int64_t min_block, int64_t max_block);

// Sum of squared 0-255 errors over the block (clipped to the frame), all
// channels.
template <typename T>
double BlockSse255(const Tensor<T>& a, const Tensor<T>& b, int64_t x, int64_t y,
                   int64_t size);

template <typename T>
struct QuadTreeResult {
  QuadTree tree;
  Tensor<T> merged;
  int64_t side_bits = 0;
  double cost = 0.0;  // SSE_255 + lambda * side_bits.
};

// Exact minimizer of SSE_255 + lambda * side_bits over all partitions and
// mode labelings. Ties prefer mode d and not splitting.
template <typename T>
QuadTreeResult<T> QuadTreeSearch(const Tensor<T>& x, const Tensor<T>& x_hat_d,
                                 const Tensor<T>& x_hat_g, double lambda,
                                 int64_t min_block, int64_t max_block);

// SSE_255 of the frame |tree| selects plus lambda * side bits.
template <typename T>
double QuadTreeCost(const QuadTree& tree, const Tensor<T>& x, const Tensor<T>& x_hat_d,
                    const Tensor<T>& x_hat_g, double lambda);
// Assembles the frame selected by the leaves of |tree|.
template <typename T>
Tensor<T> MergeByTree(const QuadTree& tree, const Tensor<T>& x_hat_d,
                      const Tensor<T>& x_hat_g);

// A tree with a single leaf per root tile, all in |mode|.
QuadTree RootLeafTree(int64_t width, int64_t height, int64_t min_block,
                      int64_t max_block, BlockMode mode);

std::vector<uint8_t> PackBits(const std::vector<bool>& bits);
std::vector<bool> UnpackBits(std::span<const uint8_t> bytes, int64_t count);

struct RdPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  double lambda = 0.0;
};
using RdCurve = std::vector<RdPoint>;

// At least 4 points, bpp > 0, strictly increasing in bpp.
void ValidateCurve(const RdCurve& curve);

// Cubic least-squares fit of log10(bpp) against PSNR for both curves,
// averaged over the common PSNR interval, in percent. Negative means |test|
// saves rate.
double BdRate(const RdCurve& anchor, const RdCurve& test);

// Coefficients c0..c3 of the cubic least-squares fit y(t) in powers of
// (t - center) / scale.
struct CubicFit {
  double center = 0.0;
  double scale = 1.0;
  double c[4] = {0, 0, 0, 0};

  double operator()(double t) const;
  // Exact integral over [lo, hi].
  double Integral(double lo, double hi) const;
};
CubicFit FitCubic(std::span<const double> t, std::span<const double> y);

}  // namespace gdc

#endif  // GDC_EVALUATION_H_
