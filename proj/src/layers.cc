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

#include "gdc/layers.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gdc/error.h"
#include "gdc/ops.h"

namespace gdc {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMapR = Eigen::Map<const MatR<T>>;
template <typename T>
using NodeT = internal::Node<T>;

// Eigen picks vectorized or scalar code per element from the buffer
// alignment, which changes rounding. All matrix work therefore runs on
// Eigen-owned (aligned) copies so results do not depend on where the
// tensor storage happens to live.
template <typename T>
MatR<T> Owned(const T* data, int64_t rows, int64_t cols) {
  return ConstMapR<T>(data, rows, cols);
}

// Per-thread im2col scratch, reused across calls. Large buffers would
// otherwise be returned to the system and faulted back in on every call.
// The aligned allocator keeps the same alignment guarantee as owned copies.
template <typename T>
using AlignedMap = Eigen::Map<MatR<T>, Eigen::AlignedMax>;

template <typename T>
AlignedMap<T> Scratch(int slot, int64_t rows, int64_t cols) {
  thread_local std::vector<T, Eigen::aligned_allocator<T>> buffers[2];
  auto& b = buffers[slot];
  if (static_cast<int64_t>(b.size()) < rows * cols) b.resize(rows * cols);
  return AlignedMap<T>(b.data(), rows, cols);
}

template <typename T>
void Store(const MatR<T>& m, T* dst) {
  std::copy(m.data(), m.data() + m.size(), dst);
}

template <typename T>
void Accumulate(const MatR<T>& m, T* dst) {
  for (Eigen::Index i = 0; i < m.size(); ++i) dst[i] += m.data()[i];
}

int64_t CeilDiv(int64_t a, int64_t b) { return (a + b - 1) / b; }

// Geometry of one stride-s, k x k, "same"-padded correlation from an
// in_h x in_w plane to an out_h x out_w plane.
struct ConvGeometry {
  int64_t channels;
  int64_t in_h, in_w;
  int64_t out_h, out_w;
  int kernel;
  int stride;

  int64_t rows() const { return channels * kernel * kernel; }
  int64_t cols() const { return out_h * out_w; }
};

template <typename T>
void Im2Col(const T* x, const ConvGeometry& g, T* col) {
  const int pad = (g.kernel - 1) / 2;
  const int64_t cols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    const T* plane = x + c * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* dst = col + ((c * g.kernel + ky) * g.kernel + kx) * cols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * g.stride + ky - pad;
          T* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill_n(row, g.out_w, T(0));
            continue;
          }
          const T* src = plane + iy * g.in_w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * g.stride + kx - pad;
            row[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters |col| back, accumulating into |x|.
template <typename T>
void Col2Im(const T* col, const ConvGeometry& g, T* x) {
  const int pad = (g.kernel - 1) / 2;
  const int64_t cols = g.cols();
  for (int64_t c = 0; c < g.channels; ++c) {
    T* plane = x + c * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* src = col + ((c * g.kernel + ky) * g.kernel + kx) * cols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * g.stride + ky - pad;
          if (iy < 0 || iy >= g.in_h) continue;
          T* dst = plane + iy * g.in_w;
          const T* row = src + oy * g.out_w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * g.stride + kx - pad;
            if (ix >= 0 && ix < g.in_w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

void CheckKernel(const char* op, const Shape& w) {
  if (w.h != w.w || w.h % 2 == 0) {
    throw ContractError(std::string(op) + ": kernel must be square and odd, got " +
                        w.ToString());
  }
}

void CheckStride(const char* op, int stride) {
  if (stride != 1 && stride != 2) {
    throw ContractError(std::string(op) + ": stride must be 1 or 2");
  }
}

template <typename T>
void CheckBias(const char* op, const Tensor<T>& bias, int64_t channels) {
  if (bias.shape() != Shape{channels, 1, 1, 1}) {
    throw DimensionError(std::string(op) + ": bias shape " +
                         bias.shape().ToString() + " for " +
                         std::to_string(channels) + " channels");
  }
}

template <typename T>
void Normal(std::span<T> out, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : out) v = static_cast<T>(dist(rng));
}

}  // namespace

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  CheckKernel("conv2d", ws);
  CheckStride("conv2d", stride);
  if (xs.c != ws.c) {
    throw DimensionError("conv2d: input " + xs.ToString() + " vs weight " +
                         ws.ToString());
  }
  CheckBias("conv2d", bias, ws.n);
  const ConvGeometry g{xs.c, xs.h, xs.w, CeilDiv(xs.h, stride),
                       CeilDiv(xs.w, stride), static_cast<int>(ws.h), stride};
  const Shape out_shape{xs.n, ws.n, g.out_h, g.out_w};
  std::vector<T> out(out_shape.numel());
  AlignedMap<T> col = Scratch<T>(0, g.rows(), g.cols());
  const MatR<T> wm = Owned(weight.values().data(), ws.n, g.rows());
  auto bv = bias.values();
  for (int64_t n = 0; n < xs.n; ++n) {
    Im2Col(x.values().data() + n * xs.c * xs.plane(), g, col.data());
    MatR<T> om = wm * col;
    for (int64_t o = 0; o < ws.n; ++o) om.row(o).array() += bv[o];
    Store(om, out.data() + n * ws.n * g.cols());
  }
  return MakeResult<T>(
      "conv2d", out_shape, std::move(out), {x, weight, bias},
      [g, xs, ws](NodeT<T>& self) {
        auto& xn = *self.inputs[0];
        auto& wn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        AlignedMap<T> col = Scratch<T>(0, g.rows(), g.cols());
        const MatR<T> wm = Owned(wn.value.data(), ws.n, g.rows());
        for (int64_t n = 0; n < xs.n; ++n) {
          const MatR<T> dout = Owned(self.grad.data() + n * ws.n * g.cols(), ws.n, g.cols());
          if (wn.requires_grad) {
            Im2Col(xn.value.data() + n * xs.c * xs.plane(), g, col.data());
            const MatR<T> dw = dout * col.transpose();
            Accumulate(dw, wn.MutableGrad().data());
          }
          if (bn.requires_grad) {
            auto& db = bn.MutableGrad();
            for (int64_t o = 0; o < ws.n; ++o) db[o] += dout.row(o).sum();
          }
          if (xn.requires_grad) {
            AlignedMap<T> dcol = Scratch<T>(1, g.rows(), g.cols());
            dcol.noalias() = wm.transpose() * dout;
            Col2Im(dcol.data(), g, xn.MutableGrad().data() + n * xs.c * xs.plane());
          }
        }
      });
}

template <typename T>
Tensor<T> TConv2d(const Tensor<T>& x, const Tensor<T>& weight,
                  const Tensor<T>& bias, int stride) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();  // [in, out, k, k]
  CheckKernel("tconv2d", ws);
  CheckStride("tconv2d", stride);
  if (xs.c != ws.n) {
    throw DimensionError("tconv2d: input " + xs.ToString() + " vs weight " +
                         ws.ToString());
  }
  CheckBias("tconv2d", bias, ws.c);
  // Geometry of the forward correlation this op is the adjoint of.
  const ConvGeometry g{ws.c, xs.h * stride, xs.w * stride, xs.h, xs.w,
                       static_cast<int>(ws.h), stride};
  const Shape out_shape{xs.n, ws.c, g.in_h, g.in_w};
  const int64_t out_plane = out_shape.plane();
  std::vector<T> out(out_shape.numel(), T(0));
  const MatR<T> wm = Owned(weight.values().data(), ws.n, g.rows());
  auto bv = bias.values();
  for (int64_t n = 0; n < xs.n; ++n) {
    const MatR<T> xm = Owned(x.values().data() + n * xs.c * xs.plane(), xs.c, xs.plane());
    AlignedMap<T> cm = Scratch<T>(0, g.rows(), g.cols());
    cm.noalias() = wm.transpose() * xm;
    T* o = out.data() + n * ws.c * out_plane;
    Col2Im(cm.data(), g, o);
    for (int64_t c = 0; c < ws.c; ++c) {
      for (int64_t i = 0; i < out_plane; ++i) o[c * out_plane + i] += bv[c];
    }
  }
  return MakeResult<T>(
      "tconv2d", out_shape, std::move(out), {x, weight, bias},
      [g, xs, ws, out_plane](NodeT<T>& self) {
        auto& xn = *self.inputs[0];
        auto& wn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        AlignedMap<T> dc = Scratch<T>(0, g.rows(), g.cols());
        const MatR<T> wm = Owned(wn.value.data(), ws.n, g.rows());
        for (int64_t n = 0; n < xs.n; ++n) {
          const T* dout = self.grad.data() + n * ws.c * out_plane;
          Im2Col(dout, g, dc.data());
          if (xn.requires_grad) {
            const MatR<T> dx = wm * dc;
            Accumulate(dx, xn.MutableGrad().data() + n * xs.c * xs.plane());
          }
          if (wn.requires_grad) {
            const MatR<T> xm =
                Owned(xn.value.data() + n * xs.c * xs.plane(), xs.c, xs.plane());
            const MatR<T> dw = xm * dc.transpose();
            Accumulate(dw, wn.MutableGrad().data());
          }
          if (bn.requires_grad) {
            auto& db = bn.MutableGrad();
            for (int64_t c = 0; c < ws.c; ++c) {
              T acc = 0;
              for (int64_t i = 0; i < out_plane; ++i) acc += dout[c * out_plane + i];
              db[c] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> Gdn(const Tensor<T>& x, const Tensor<T>& beta, const Tensor<T>& gamma,
              bool inverse) {
  const Shape xs = x.shape();
  const int64_t c = xs.c;
  if (beta.shape() != Shape{c, 1, 1, 1} || gamma.shape() != Shape{c, c, 1, 1}) {
    throw DimensionError("gdn: parameters " + beta.shape().ToString() + ", " +
                         gamma.shape().ToString() + " for input " +
                         xs.ToString());
  }
  const int64_t plane = xs.plane();
  std::vector<T> out(xs.numel());
  const MatR<T> gm = Owned(gamma.values().data(), c, c);
  const MatR<T> bvec = Owned(beta.values().data(), c, 1);
  const T power = inverse ? T(0.5) : T(-0.5);
  for (int64_t n = 0; n < xs.n; ++n) {
    const MatR<T> xm = Owned(x.values().data() + n * c * plane, c, plane);
    MatR<T> norm = gm * xm.array().square().matrix();
    norm.colwise() += bvec.col(0);
    const MatR<T> om = xm.array() * norm.array().pow(power);
    Store(om, out.data() + n * c * plane);
  }
  return MakeResult<T>(
      "gdn", xs, std::move(out), {x, beta, gamma},
      [xs, c, plane, inverse](NodeT<T>& self) {
        auto& xn = *self.inputs[0];
        auto& bn = *self.inputs[1];
        auto& gn = *self.inputs[2];
        const MatR<T> gm = Owned(gn.value.data(), c, c);
        const MatR<T> bvec = Owned(bn.value.data(), c, 1);
        for (int64_t n = 0; n < xs.n; ++n) {
          const MatR<T> xm = Owned(xn.value.data() + n * c * plane, c, plane);
          const MatR<T> dy = Owned(self.grad.data() + n * c * plane, c, plane);
          MatR<T> xsq = xm.array().square().matrix();
          MatR<T> norm = gm * xsq;
          norm.colwise() += bvec.col(0);
          MatR<T> d, dd;
          if (inverse) {
            d = norm.array().sqrt().matrix();
            dd = (T(0.5) / norm.array().sqrt()).matrix();
          } else {
            d = norm.array().rsqrt().matrix();
            dd = (T(-0.5) * norm.array().pow(T(-1.5))).matrix();
          }
          // t_i = dy_i * x_i * d'(norm_i): sensitivity w.r.t. norm_i.
          MatR<T> t = (dy.array() * xm.array() * dd.array()).matrix();
          if (xn.requires_grad) {
            const MatR<T> dx = (dy.array() * d.array() +
                                T(2) * xm.array() * (gm.transpose() * t).array())
                                   .matrix();
            Accumulate(dx, xn.MutableGrad().data() + n * c * plane);
          }
          if (gn.requires_grad) {
            const MatR<T> dg = t * xsq.transpose();
            Accumulate(dg, gn.MutableGrad().data());
          }
          if (bn.requires_grad) {
            auto& db = bn.MutableGrad();
            for (int64_t i = 0; i < c; ++i) db[i] += t.row(i).sum();
          }
        }
      });
}

template <typename T>
Tensor<T> Prelu(const Tensor<T>& x, const Tensor<T>& slope) {
  const Shape xs = x.shape();
  if (slope.shape() != Shape{xs.c, 1, 1, 1}) {
    throw DimensionError("prelu: slope " + slope.shape().ToString() +
                         " for input " + xs.ToString());
  }
  const int64_t plane = xs.plane();
  auto xv = x.values();
  auto sv = slope.values();
  std::vector<T> out(xs.numel());
  for (int64_t n = 0; n < xs.n; ++n) {
    for (int64_t c = 0; c < xs.c; ++c) {
      const int64_t base = (n * xs.c + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        const T v = xv[base + i];
        out[base + i] = v >= T(0) ? v : sv[c] * v;
      }
    }
  }
  return MakeResult<T>(
      "prelu", xs, std::move(out), {x, slope}, [xs, plane](NodeT<T>& self) {
        auto& xn = *self.inputs[0];
        auto& sn = *self.inputs[1];
        for (int64_t n = 0; n < xs.n; ++n) {
          for (int64_t c = 0; c < xs.c; ++c) {
            const int64_t base = (n * xs.c + c) * plane;
            T ds = 0;
            for (int64_t i = 0; i < plane; ++i) {
              const T v = xn.value[base + i];
              const T g = self.grad[base + i];
              if (v >= T(0)) {
                if (xn.requires_grad) xn.MutableGrad()[base + i] += g;
              } else {
                if (xn.requires_grad) xn.MutableGrad()[base + i] += sn.value[c] * g;
                ds += v * g;
              }
            }
            if (sn.requires_grad) sn.MutableGrad()[c] += ds;
          }
        }
      });
}

template <typename T>
Tensor<T> CausalMask(int64_t out_channels, int64_t in_channels, int kernel,
                     MaskKind kind) {
  if (kernel % 2 == 0) throw ContractError("causal mask: kernel must be odd");
  const int center = kernel / 2;
  std::vector<T> m(out_channels * in_channels * kernel * kernel, T(0));
  for (int64_t oi = 0; oi < out_channels * in_channels; ++oi) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const bool past = ky < center || (ky == center && kx < center);
        const bool keep =
            kind == MaskKind::kNone || past ||
            (kind == MaskKind::kB && ky == center && kx == center);
        m[(oi * kernel + ky) * kernel + kx] = keep ? T(1) : T(0);
      }
    }
  }
  return Tensor<T>({out_channels, in_channels, kernel, kernel}, std::move(m));
}

template <typename T>
Tensor<T> MaskedConv2d(const Tensor<T>& x, const Tensor<T>& weight,
                       const Tensor<T>& bias, MaskKind kind) {
  const Shape ws = weight.shape();
  CheckKernel("masked_conv2d", ws);
  const Tensor<T> mask = CausalMask<T>(ws.n, ws.c, static_cast<int>(ws.h), kind);
  return Conv2d(x, Mul(weight, mask), bias, 1);
}

int64_t NetworkSpec::total_stride() const {
  int64_t s = 1;
  for (const auto& l : layers) s *= l.stride;
  return s;
}

void NetworkSpec::Validate() const {
  if (layers.empty()) throw ContractError("network spec has no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const ConvSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (l.kernel % 2 == 0 || l.kernel <= 0) {
      throw ContractError(where + "kernel must be odd");
    }
    if (l.stride != 1 && l.stride != 2) {
      throw ContractError(where + "stride must be 1 or 2");
    }
    if (l.in_channels <= 0 || l.out_channels <= 0) {
      throw ContractError(where + "channel counts must be positive");
    }
    if (l.mask != MaskKind::kNone &&
        (l.stride != 1 || l.direction != Direction::kDown)) {
      throw ContractError(where + "masked layers must be stride-1 conv");
    }
    if (i > 0 && layers[i - 1].out_channels != l.in_channels) {
      throw ContractError(where + "expects " + std::to_string(l.in_channels) +
                          " channels, previous layer gives " +
                          std::to_string(layers[i - 1].out_channels));
    }
  }
}

bool SpatiallyInverse(const NetworkSpec& encoder, const NetworkSpec& decoder) {
  for (const auto& l : encoder.layers) {
    if (l.direction != Direction::kDown) return false;
  }
  for (const auto& l : decoder.layers) {
    if (l.direction != Direction::kUp && l.stride != 1) return false;
  }
  return encoder.total_stride() == decoder.total_stride();
}

int64_t OutputSize(const NetworkSpec& spec, int64_t size) {
  for (const auto& l : spec.layers) {
    size = l.direction == Direction::kDown ? CeilDiv(size, l.stride)
                                           : size * l.stride;
  }
  return size;
}

namespace {

ConvSpec Down(int64_t in, int64_t out, int k, int s, Activation a) {
  return {in, out, k, s, Direction::kDown, a, MaskKind::kNone};
}
ConvSpec Up(int64_t in, int64_t out, int k, int s, Activation a) {
  return {in, out, k, s, Direction::kUp, a, MaskKind::kNone};
}

}  // namespace

NetworkSpec EncoderSpec(int64_t in, int64_t hidden, int64_t latent) {
  return {NetworkRole::kEncoder,
          {Down(in, hidden, 5, 2, Activation::kGdn),
           Down(hidden, hidden, 5, 2, Activation::kGdn),
           Down(hidden, hidden, 5, 2, Activation::kGdn),
           Down(hidden, latent, 5, 2, Activation::kNone)}};
}

NetworkSpec DecoderSpec(int64_t latent, int64_t hidden, int64_t out) {
  return {NetworkRole::kDecoder,
          {Up(latent, hidden, 5, 2, Activation::kIgdn),
           Up(hidden, hidden, 5, 2, Activation::kIgdn),
           Up(hidden, hidden, 5, 2, Activation::kIgdn),
           Up(hidden, out, 5, 2, Activation::kNone)}};
}

NetworkSpec HyperEncoderSpec(int64_t latent, int64_t hidden, int64_t hyper) {
  return {NetworkRole::kHyperEncoder,
          {Down(latent, hidden, 3, 1, Activation::kPrelu),
           Down(hidden, hidden, 5, 2, Activation::kPrelu),
           Down(hidden, hyper, 5, 2, Activation::kNone)}};
}

NetworkSpec HyperDecoderSpec(int64_t hyper, int64_t hidden, int64_t latent) {
  return {NetworkRole::kHyperDecoder,
          {Up(hyper, hidden, 5, 2, Activation::kPrelu),
           Up(hidden, hidden, 5, 2, Activation::kPrelu),
           Down(hidden, 2 * latent, 3, 1, Activation::kNone)}};
}

NetworkSpec ContextSpec(int64_t hyper) {
  NetworkSpec spec{NetworkRole::kContext,
                   {Down(hyper, 16, 5, 1, Activation::kPrelu),
                    Down(16, 16, 5, 1, Activation::kPrelu),
                    Down(16, 2 * hyper, 1, 1, Activation::kNone)}};
  spec.layers[0].mask = MaskKind::kA;
  spec.layers[1].mask = MaskKind::kB;
  return spec;
}

NetworkSpec GdSpec(int64_t out) {
  return {NetworkRole::kGd,
          {Down(6, 16, 5, 1, Activation::kPrelu),
           Down(16, 16, 5, 1, Activation::kPrelu),
           Down(16, out, 5, 1, Activation::kPrelu)}};
}

NetworkSpec GsSpec(int64_t g_channels) {
  return {NetworkRole::kGs,
          {Down(3 + g_channels, 16, 5, 1, Activation::kPrelu),
           Down(16, 16, 5, 1, Activation::kPrelu),
           Down(16, 3, 5, 1, Activation::kPrelu)}};
}

NetworkSpec PredictionEncoderSpec(int64_t latent) {
  return {NetworkRole::kEncoder,
          {Down(3, latent, 5, 2, Activation::kPrelu),
           Down(latent, latent, 5, 2, Activation::kPrelu),
           Down(latent, latent, 5, 2, Activation::kPrelu),
           Down(latent, latent, 5, 2, Activation::kNone)}};
}

int64_t CountParameters(const NetworkSpec& spec) {
  int64_t total = 0;
  for (const auto& l : spec.layers) {
    total += l.in_channels * l.out_channels * l.kernel * l.kernel + l.out_channels;
    switch (l.activation) {
      case Activation::kGdn:
      case Activation::kIgdn:
        total += l.out_channels + l.out_channels * l.out_channels;
        break;
      case Activation::kPrelu:
        total += l.out_channels;
        break;
      case Activation::kNone:
        break;
    }
  }
  return total;
}

template <typename T>
Tensor<T>& ParamStore<T>::Add(const std::string& name, Tensor<T> value) {
  if (Contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  entries_.emplace_back(name, std::move(value));
  return entries_.back().second;
}

template <typename T>
bool ParamStore<T>::Contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

template <typename T>
const Tensor<T>& ParamStore<T>::Get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ContractError("unknown parameter '" + name + "'");
}

template <typename T>
Tensor<T>& ParamStore<T>::Get(const std::string& name) {
  for (auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw ContractError("unknown parameter '" + name + "'");
}

template <typename T>
int64_t ParamStore<T>::CountParameters() const {
  int64_t total = 0;
  for (const auto& e : entries_) total += e.second.numel();
  return total;
}

template <typename T>
int64_t ParamStore<T>::CountParameters(const std::string& prefix) const {
  int64_t total = 0;
  for (const auto& e : entries_) {
    if (e.first.rfind(prefix, 0) == 0) total += e.second.numel();
  }
  return total;
}

template <typename T>
void ParamStore<T>::ZeroGrad() {
  for (auto& e : entries_) e.second.ZeroGrad();
}

template <typename T>
int ParamStore<T>::CopyMatching(const ParamStore& other) {
  int copied = 0;
  for (auto& [name, tensor] : entries_) {
    if (!other.Contains(name)) continue;
    const Tensor<T>& src = other.Get(name);
    if (src.shape() != tensor.shape()) continue;
    auto dst = tensor.mutable_values();
    std::copy(src.values().begin(), src.values().end(), dst.begin());
    ++copied;
  }
  return copied;
}

template <typename T>
Tensor<T> Network<T>::Forward(const Tensor<T>& x) const {
  return ForwardPrefix(x, layers_.size());
}

template <typename T>
Tensor<T> Network<T>::ForwardPrefix(const Tensor<T>& x, size_t count) const {
  Tensor<T> h = x;
  for (size_t i = 0; i < count && i < layers_.size(); ++i) {
    const ConvSpec& s = spec_.layers[i];
    const Layer& l = layers_[i];
    if (s.mask != MaskKind::kNone) {
      h = MaskedConv2d(h, l.weight, l.bias, s.mask);
    } else if (s.direction == Direction::kDown) {
      h = Conv2d(h, l.weight, l.bias, s.stride);
    } else {
      h = TConv2d(h, l.weight, l.bias, s.stride);
    }
    switch (s.activation) {
      case Activation::kGdn:
      case Activation::kIgdn:
        h = Gdn(h, AddScalar(Square(l.gdn_beta), kGdnBetaMin),
                Square(l.gdn_gamma), s.activation == Activation::kIgdn);
        break;
      case Activation::kPrelu:
        h = Prelu(h, l.slope);
        break;
      case Activation::kNone:
        break;
    }
  }
  return h;
}

template <typename T>
Network<T> MakeNetwork(const NetworkSpec& spec, ParamStore<T>& params,
                       const std::string& prefix, NetworkInit init,
                       std::mt19937_64& rng) {
  spec.Validate();
  if (init == NetworkInit::kIdentityDifference) {
    if (spec.role != NetworkRole::kGd || spec.in_channels() != 6 ||
        spec.out_channels() < 3) {
      throw ContractError("identity-difference init needs a GD spec 6 -> >=3");
    }
  }
  if (init == NetworkInit::kIdentitySum) {
    if (spec.role != NetworkRole::kGs || spec.in_channels() < 6 ||
        spec.out_channels() != 3) {
      throw ContractError("identity-sum init needs a GS spec (3+G) -> 3");
    }
  }
  const bool identity = init != NetworkInit::kRandom;
  if (identity) {
    for (const auto& l : spec.layers) {
      if (l.direction != Direction::kDown || l.stride != 1 ||
          l.activation == Activation::kGdn || l.activation == Activation::kIgdn ||
          l.mask != MaskKind::kNone) {
        throw ContractError("identity init needs stride-1 conv layers");
      }
    }
    for (size_t i = 0; i + 1 < spec.layers.size(); ++i) {
      if (spec.layers[i].out_channels < 3) {
        throw ContractError("identity init needs >= 3 hidden channels");
      }
    }
  }

  Network<T> net;
  net.spec_ = spec;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const ConvSpec& s = spec.layers[i];
    const std::string base = prefix + "." + std::to_string(i) + ".";
    const int64_t k = s.kernel;
    typename Network<T>::Layer layer;
    Shape wshape = s.direction == Direction::kDown
                       ? Shape{s.out_channels, s.in_channels, k, k}
                       : Shape{s.in_channels, s.out_channels, k, k};
    Tensor<T> w(wshape, true);
    auto wv = w.mutable_values();
    const double fan_in = static_cast<double>(s.in_channels * k * k) /
                          (s.direction == Direction::kUp ? s.stride * s.stride : 1);
    Normal<T>(wv, 1.0 / std::sqrt(fan_in), rng);
    if (identity) {
      // Output channels 0..2 carry the exact difference/sum through centre
      // taps; the other hidden channels keep random weights and are never
      // read by channels 0..2 of the next layer.
      const int64_t ctr = (k / 2) * k + k / 2;
      for (int64_t o = 0; o < std::min<int64_t>(3, s.out_channels); ++o) {
        T* wo = wv.data() + o * s.in_channels * k * k;
        std::fill_n(wo, s.in_channels * k * k, T(0));
        wo[o * k * k + ctr] = T(1);
        if (i == 0) {
          wo[(o + 3) * k * k + ctr] =
              init == NetworkInit::kIdentityDifference ? T(-1) : T(1);
        }
      }
    }
    layer.weight = params.Add(base + "weight", w);
    layer.bias = params.Add(base + "bias", Tensor<T>({s.out_channels, 1, 1, 1}, true));
    switch (s.activation) {
      case Activation::kGdn:
      case Activation::kIgdn: {
        const int64_t c = s.out_channels;
        Tensor<T> beta = Tensor<T>::Full({c, 1, 1, 1}, T(1), true);
        std::vector<T> gamma(c * c, T(0.01));
        for (int64_t j = 0; j < c; ++j) gamma[j * c + j] = static_cast<T>(std::sqrt(0.1));
        layer.gdn_beta = params.Add(base + "gdn_beta", beta);
        layer.gdn_gamma =
            params.Add(base + "gdn_gamma", Tensor<T>({c, c, 1, 1}, std::move(gamma), true));
        break;
      }
      case Activation::kPrelu:
        layer.slope = params.Add(
            base + "prelu",
            Tensor<T>::Full({s.out_channels, 1, 1, 1}, identity ? T(1) : T(0.25), true));
        break;
      case Activation::kNone:
        break;
    }
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

#define GDC_INSTANTIATE(T)                                                      \
  template Tensor<T> Conv2d(const Tensor<T>&, const Tensor<T>&,                 \
                            const Tensor<T>&, int);                             \
  template Tensor<T> TConv2d(const Tensor<T>&, const Tensor<T>&,                \
                             const Tensor<T>&, int);                            \
  template Tensor<T> Gdn(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                         bool);                                                 \
  template Tensor<T> Prelu(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> CausalMask<T>(int64_t, int64_t, int, MaskKind);            \
  template Tensor<T> MaskedConv2d(const Tensor<T>&, const Tensor<T>&,           \
                                  const Tensor<T>&, MaskKind);                  \
  template class ParamStore<T>;                                                 \
  template class Network<T>;                                                    \
  template Network<T> MakeNetwork(const NetworkSpec&, ParamStore<T>&,           \
                                  const std::string&, NetworkInit,              \
                                  std::mt19937_64&);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
