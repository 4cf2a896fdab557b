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

#include "gdc/evaluation.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "gdc/error.h"

namespace gdc {

namespace {

template <typename T>
void CheckSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": " + a.shape().ToString() + " vs " +
                         b.shape().ToString());
  }
}

template <typename T>
void CheckFrameTriple(const Tensor<T>& x, const Tensor<T>& d, const Tensor<T>& g) {
  CheckSameShape(x, d, "quadtree");
  CheckSameShape(x, g, "quadtree");
  if (x.shape().n != 1) throw DimensionError("quadtree: batch must be 1");
}

bool IsPowerOfTwo(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

// Pre-order walk of the nodes inside the frame; |fn| returns whether the
// node is split.
template <typename Fn>
void WalkNodes(int64_t width, int64_t height, int64_t x, int64_t y, int64_t size,
               Fn& fn) {
  if (x >= width || y >= height) return;
  if (!fn(x, y, size)) return;
  const int64_t h = size / 2;
  WalkNodes(width, height, x, y, h, fn);
  WalkNodes(width, height, x + h, y, h, fn);
  WalkNodes(width, height, x, y + h, h, fn);
  WalkNodes(width, height, x + h, y + h, h, fn);
}

template <typename T>
struct SearchState {
  const Tensor<T>* x;
  const Tensor<T>* d;
  const Tensor<T>* g;
  double lambda;
  int64_t min_block;
  int64_t width;
  int64_t height;

  // Returns the optimal cost of the subtree and appends its pre-order nodes.
  double Solve(int64_t bx, int64_t by, int64_t size, std::vector<QuadTree::Node>& out) const {
    const double flag = size > min_block ? 1.0 : 0.0;
    const double leaf_d = BlockSse255(*x, *d, bx, by, size) + lambda * (flag + 1.0);
    const double leaf_g = BlockSse255(*x, *g, bx, by, size) + lambda * (flag + 1.0);
    QuadTree::Node node{bx, by, size, false, BlockMode::kD};
    double best = leaf_d;
    if (leaf_g < best) {
      best = leaf_g;
      node.mode = BlockMode::kG;
    }
    if (size > min_block) {
      std::vector<QuadTree::Node> children;
      double split = lambda * flag;
      const int64_t h = size / 2;
      const int64_t offs[4][2] = {{0, 0}, {h, 0}, {0, h}, {h, h}};
      for (const auto& o : offs) {
        if (bx + o[0] >= width || by + o[1] >= height) continue;
        split += Solve(bx + o[0], by + o[1], h, children);
      }
      if (split < best) {
        best = split;
        node.split = true;
        node.mode = BlockMode::kD;
        out.push_back(node);
        out.insert(out.end(), children.begin(), children.end());
        return best;
      }
    }
    out.push_back(node);
    return best;
  }
};

}  // namespace

double PsnrFromMse(double mse) {
  if (!(mse >= 0) || !std::isfinite(mse)) throw NumericError("psnr: invalid mse");
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

template <typename T>
double Psnr(const Tensor<T>& a, const Tensor<T>& b) {
  CheckSameShape(a, b, "psnr");
  auto av = a.values();
  auto bv = b.values();
  double sse = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double e = static_cast<double>(av[i]) - bv[i];
    sse += e * e;
  }
  return PsnrFromMse(sse / static_cast<double>(av.size()));
}

template <typename T>
double Mse255(const Tensor<T>& a, const Tensor<T>& b) {
  CheckSameShape(a, b, "mse");
  auto av = a.values();
  auto bv = b.values();
  double sse = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double e = 255.0 * (static_cast<double>(av[i]) - bv[i]);
    sse += e * e;
  }
  return sse / static_cast<double>(av.size());
}

double Bpp(double total_bits, int64_t width, int64_t height) {
  if (width <= 0 || height <= 0) throw ContractError("bpp: empty frame");
  return total_bits / static_cast<double>(width * height);
}

template <typename T>
HybridChoice FrameHybridSelect(std::span<const HybridCandidate<T>> candidates,
                               const Tensor<T>& x, double lambda) {
  if (candidates.empty()) throw ContractError("hybrid selection needs candidates");
  const Shape& s = x.shape();
  HybridChoice best;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double cost = Mse255(candidates[i].reconstruction, x) +
                        lambda * Bpp(candidates[i].rate_bits, s.w, s.h);
    if (i == 0 || cost < best.cost ||
        (cost == best.cost && candidates[i].rate_bits < candidates[best.index].rate_bits)) {
      best = {i, cost};
    }
  }
  return best;
}

void ValidateBlockRange(int64_t min_block, int64_t max_block) {
  if (!IsPowerOfTwo(min_block) || !IsPowerOfTwo(max_block) || min_block < 4 ||
      max_block > 256 || min_block > max_block) {
    throw ContractError("block sizes must be powers of two with 4 <= min <= max <= 256");
  }
}

template <typename T>
double BlockSse255(const Tensor<T>& a, const Tensor<T>& b, int64_t x, int64_t y,
                   int64_t size) {
  const Shape& s = a.shape();
  auto av = a.values();
  auto bv = b.values();
  const int64_t x1 = std::min(x + size, s.w);
  const int64_t y1 = std::min(y + size, s.h);
  double sse = 0.0;
  for (int64_t c = 0; c < s.c; ++c) {
    for (int64_t r = y; r < y1; ++r) {
      const int64_t row = (c * s.h + r) * s.w;
      for (int64_t col = x; col < x1; ++col) {
        const double e = 255.0 * (static_cast<double>(av[row + col]) - bv[row + col]);
        sse += e * e;
      }
    }
  }
  return sse;
}

int64_t QuadTree::SideBits() const {
  int64_t bits = 0;
  for (const Node& n : nodes) {
    if (n.size > min_block) ++bits;
    if (!n.split) ++bits;
  }
  return bits;
}

std::vector<bool> QuadTree::Serialize() const {
  std::vector<bool> bits;
  bits.reserve(nodes.size() * 2);
  for (const Node& n : nodes) {
    if (n.size > min_block) bits.push_back(n.split);
    if (!n.split) bits.push_back(n.mode == BlockMode::kG);
  }
  return bits;
}

QuadTree QuadTree::Deserialize(const std::vector<bool>& bits, int64_t width,
                               int64_t height, int64_t min_block, int64_t max_block) {
  ValidateBlockRange(min_block, max_block);
  if (width <= 0 || height <= 0) throw ContractError("quadtree: empty frame");
  QuadTree tree{width, height, min_block, max_block, {}};
  size_t pos = 0;
  auto next = [&]() -> bool {
    if (pos >= bits.size()) throw StreamError("quadtree side info truncated");
    return bits[pos++];
  };
  auto read_node = [&](int64_t bx, int64_t by, int64_t size) {
    Node n{bx, by, size, false, BlockMode::kD};
    if (size > min_block) n.split = next();
    if (!n.split) n.mode = next() ? BlockMode::kG : BlockMode::kD;
    tree.nodes.push_back(n);
    return n.split;
  };
  for (int64_t y = 0; y < height; y += max_block) {
    for (int64_t x = 0; x < width; x += max_block) {
      WalkNodes(width, height, x, y, max_block, read_node);
    }
  }
  if (pos != bits.size()) throw StreamError("quadtree side info has trailing bits");
  return tree;
}

std::vector<BlockMode> QuadTree::ModeMap() const {
  std::vector<BlockMode> map(width * height, BlockMode::kD);
  for (const Node& n : nodes) {
    if (n.split) continue;
    for (int64_t r = n.y; r < std::min(n.y + n.size, height); ++r) {
      for (int64_t c = n.x; c < std::min(n.x + n.size, width); ++c) {
        map[r * width + c] = n.mode;
      }
    }
  }
  return map;
}

double QuadTree::ModeFraction(BlockMode mode) const {
  const std::vector<BlockMode> map = ModeMap();
  if (map.empty()) return 0.0;
  return static_cast<double>(std::count(map.begin(), map.end(), mode)) /
         static_cast<double>(map.size());
}

QuadTree RootLeafTree(int64_t width, int64_t height, int64_t min_block,
                      int64_t max_block, BlockMode mode) {
  ValidateBlockRange(min_block, max_block);
  QuadTree tree{width, height, min_block, max_block, {}};
  for (int64_t y = 0; y < height; y += max_block) {
    for (int64_t x = 0; x < width; x += max_block) {
      tree.nodes.push_back({x, y, max_block, false, mode});
    }
  }
  return tree;
}

template <typename T>
Tensor<T> MergeByTree(const QuadTree& tree, const Tensor<T>& x_hat_d,
                      const Tensor<T>& x_hat_g) {
  CheckSameShape(x_hat_d, x_hat_g, "merge");
  const Shape& s = x_hat_d.shape();
  if (s.w != tree.width || s.h != tree.height || s.n != 1) {
    throw DimensionError("merge: tree does not match the frame");
  }
  const std::vector<BlockMode> map = tree.ModeMap();
  auto dv = x_hat_d.values();
  auto gv = x_hat_g.values();
  std::vector<T> out(dv.size());
  for (int64_t c = 0; c < s.c; ++c) {
    for (int64_t p = 0; p < s.plane(); ++p) {
      const int64_t i = c * s.plane() + p;
      out[i] = map[p] == BlockMode::kG ? gv[i] : dv[i];
    }
  }
  return Tensor<T>(s, std::move(out));
}

template <typename T>
double QuadTreeCost(const QuadTree& tree, const Tensor<T>& x, const Tensor<T>& x_hat_d,
                    const Tensor<T>& x_hat_g, double lambda) {
  CheckFrameTriple(x, x_hat_d, x_hat_g);
  double cost = lambda * static_cast<double>(tree.SideBits());
  for (const auto& n : tree.nodes) {
    if (n.split) continue;
    cost += BlockSse255(x, n.mode == BlockMode::kG ? x_hat_g : x_hat_d, n.x, n.y, n.size);
  }
  return cost;
}

template <typename T>
QuadTreeResult<T> QuadTreeSearch(const Tensor<T>& x, const Tensor<T>& x_hat_d,
                                 const Tensor<T>& x_hat_g, double lambda,
                                 int64_t min_block, int64_t max_block) {
  ValidateBlockRange(min_block, max_block);
  CheckFrameTriple(x, x_hat_d, x_hat_g);
  if (!(lambda >= 0) || !std::isfinite(lambda)) {
    throw ContractError("quadtree: lambda must be finite and non-negative");
  }
  const Shape& s = x.shape();
  QuadTreeResult<T> result;
  result.tree = {s.w, s.h, min_block, max_block, {}};
  SearchState<T> state{&x, &x_hat_d, &x_hat_g, lambda, min_block, s.w, s.h};
  for (int64_t y = 0; y < s.h; y += max_block) {
    for (int64_t bx = 0; bx < s.w; bx += max_block) {
      result.cost += state.Solve(bx, y, max_block, result.tree.nodes);
    }
  }
  result.side_bits = result.tree.SideBits();
  result.merged = MergeByTree(result.tree, x_hat_d, x_hat_g);
  return result;
}

std::vector<uint8_t> PackBits(const std::vector<bool>& bits) {
  std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
  }
  return bytes;
}

std::vector<bool> UnpackBits(std::span<const uint8_t> bytes, int64_t count) {
  if (count < 0 || static_cast<size_t>((count + 7) / 8) > bytes.size()) {
    throw StreamError("packed bits truncated");
  }
  std::vector<bool> bits(count);
  for (int64_t i = 0; i < count; ++i) bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return bits;
}

void ValidateCurve(const RdCurve& curve) {
  if (curve.size() < 4) throw ContractError("RD curve needs at least 4 points");
  for (size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i].bpp > 0) || !std::isfinite(curve[i].bpp) ||
        !std::isfinite(curve[i].psnr)) {
      throw ContractError("RD curve points need finite psnr and bpp > 0");
    }
    if (i > 0 && curve[i].bpp <= curve[i - 1].bpp) {
      throw ContractError("RD curve must be strictly increasing in bpp");
    }
  }
}

double CubicFit::operator()(double t) const {
  const double u = (t - center) / scale;
  return ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
}

double CubicFit::Integral(double lo, double hi) const {
  auto antiderivative = [&](double t) {
    const double u = (t - center) / scale;
    return scale * u * (c[0] + u * (c[1] / 2 + u * (c[2] / 3 + u * c[3] / 4)));
  };
  return antiderivative(hi) - antiderivative(lo);
}

CubicFit FitCubic(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 4) {
    throw ContractError("cubic fit needs at least 4 paired samples");
  }
  CubicFit fit;
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  fit.center = 0.5 * (*lo + *hi);
  fit.scale = 0.5 * (*hi - *lo);
  if (!(fit.scale > 0)) throw ContractError("cubic fit needs distinct abscissae");
  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (t[i] - fit.center) / fit.scale;
    a(i, 0) = 1.0;
    a(i, 1) = u;
    a(i, 2) = u * u;
    a(i, 3) = u * u * u;
    b(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) throw ContractError("cubic fit is rank deficient");
  const Eigen::Vector4d coef = qr.solve(b);
  for (int k = 0; k < 4; ++k) fit.c[k] = coef(k);
  return fit;
}

double BdRate(const RdCurve& anchor, const RdCurve& test) {
  ValidateCurve(anchor);
  ValidateCurve(test);
  auto fit = [](const RdCurve& curve, double& lo, double& hi) {
    std::vector<double> psnr;
    std::vector<double> rate;
    for (const auto& p : curve) {
      psnr.push_back(p.psnr);
      rate.push_back(std::log10(p.bpp));
    }
    lo = *std::min_element(psnr.begin(), psnr.end());
    hi = *std::max_element(psnr.begin(), psnr.end());
    return FitCubic(psnr, rate);
  };
  double a_lo, a_hi, t_lo, t_hi;
  const CubicFit fa = fit(anchor, a_lo, a_hi);
  const CubicFit ft = fit(test, t_lo, t_hi);
  const double lo = std::max(a_lo, t_lo);
  const double hi = std::min(a_hi, t_hi);
  if (!(hi > lo)) throw RangeError("bd-rate: PSNR ranges do not overlap");
  const double mean_diff = (ft.Integral(lo, hi) - fa.Integral(lo, hi)) / (hi - lo);
  return 100.0 * (std::pow(10.0, mean_diff) - 1.0);
}

#define GDC_INSTANTIATE(T)                                                       \
  template double Psnr(const Tensor<T>&, const Tensor<T>&);                      \
  template double Mse255(const Tensor<T>&, const Tensor<T>&);                    \
  template HybridChoice FrameHybridSelect(std::span<const HybridCandidate<T>>,   \
                                          const Tensor<T>&, double);             \
  template double BlockSse255(const Tensor<T>&, const Tensor<T>&, int64_t,       \
                              int64_t, int64_t);                                 \
  template QuadTreeResult<T> QuadTreeSearch(const Tensor<T>&, const Tensor<T>&,  \
                                            const Tensor<T>&, double, int64_t,   \
                                            int64_t);                            \
  template double QuadTreeCost(const QuadTree&, const Tensor<T>&,                \
                               const Tensor<T>&, const Tensor<T>&, double);      \
  template Tensor<T> MergeByTree(const QuadTree&, const Tensor<T>&,              \
                                 const Tensor<T>&);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
