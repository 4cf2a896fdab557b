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

#include "gdc/entropy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gdc/error.h"
#include "gdc/ops.h"

namespace gdc {

namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr uint32_t kBottom = 1u << 16;
// Support half-width in standard deviations, and its hard cap in bins.
constexpr double kTailSigmas = 8.0;
constexpr int32_t kMaxHalfWidth = 255;

template <typename T>
using NodeT = internal::Node<T>;

double Phi(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double UpperTail(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }
double Density(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

// Unclamped bin mass, computed on the tail side that avoids cancellation.
double RawMass(double value, double mean, double scale) {
  const double d = value - mean;
  const double upper = (d + 0.5) / scale;
  const double lower = (d - 0.5) / scale;
  return d > 0 ? UpperTail(lower) - UpperTail(upper) : Phi(upper) - Phi(lower);
}

void CheckFinite(const char* op, double v) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

template <typename T>
Tensor<T> Quantize(const Tensor<T>& y, QuantMode mode, uint64_t seed) {
  if (mode == QuantMode::kRound) return RoundStraightThrough(y);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  std::vector<T> noise(y.numel());
  for (auto& v : noise) v = static_cast<T>(dist(rng));
  return Add(y, Tensor<T>(y.shape(), std::move(noise)));
}

double DiscretizedGaussianMass(double value, double mean, double scale) {
  return std::max(RawMass(value, mean, scale), kMinProbability);
}

template <typename T>
Tensor<T> GaussianBits(const Tensor<T>& y_hat, const Tensor<T>& mean,
                       const Tensor<T>& scale) {
  if (y_hat.shape() != mean.shape() || y_hat.shape() != scale.shape()) {
    throw DimensionError("gaussian_bits: shapes " + y_hat.shape().ToString() +
                         ", " + mean.shape().ToString() + ", " +
                         scale.shape().ToString());
  }
  auto yv = y_hat.values();
  auto mv = mean.values();
  auto sv = scale.values();
  std::vector<T> out(yv.size());
  for (size_t i = 0; i < out.size(); ++i) {
    CheckFinite("gaussian_bits", yv[i]);
    CheckFinite("gaussian_bits", mv[i]);
    CheckFinite("gaussian_bits", sv[i]);
    if (sv[i] < T(kScaleMin) * T(0.999)) {
      throw ContractError("gaussian_bits: scale below floor");
    }
    out[i] = static_cast<T>(-std::log2(DiscretizedGaussianMass(yv[i], mv[i], sv[i])));
  }
  return MakeResult<T>(
      "gaussian_bits", y_hat.shape(), std::move(out), {y_hat, mean, scale},
      [](NodeT<T>& self) {
        auto& yn = *self.inputs[0];
        auto& mn = *self.inputs[1];
        auto& sn = *self.inputs[2];
        for (size_t i = 0; i < self.grad.size(); ++i) {
          const double s = sn.value[i];
          const double d = static_cast<double>(yn.value[i]) - mn.value[i];
          const double p = RawMass(yn.value[i], mn.value[i], s);
          if (p < kMinProbability) continue;
          const double u = (d + 0.5) / s;
          const double l = (d - 0.5) / s;
          const double dbits_dp = -1.0 / (p * std::numbers::ln2);
          const double dp_dy = (Density(u) - Density(l)) / s;
          const double dp_ds = -(Density(u) * u - Density(l) * l) / s;
          const double g = self.grad[i];
          if (yn.requires_grad) yn.MutableGrad()[i] += static_cast<T>(g * dbits_dp * dp_dy);
          if (mn.requires_grad) mn.MutableGrad()[i] -= static_cast<T>(g * dbits_dp * dp_dy);
          if (sn.requires_grad) sn.MutableGrad()[i] += static_cast<T>(g * dbits_dp * dp_ds);
        }
      });
}

template <typename T>
Tensor<T> ScaleFromRaw(const Tensor<T>& raw) {
  return AddScalar(Softplus(raw), kScaleMin);
}

void ValidateCdf(const Cdf& cdf) {
  if (cdf.size() < 2 || cdf.front() != 0 || cdf.back() != kCdfTotal) {
    throw ContractError("malformed CDF: must run from 0 to 65536");
  }
  for (size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) {
      throw ContractError("malformed CDF: not strictly increasing at " +
                          std::to_string(i));
    }
  }
}

void RangeEncoder::Encode(uint32_t cum_freq, uint32_t freq) {
  range_ >>= kCdfPrecision;
  low_ += cum_freq * range_;
  range_ *= freq;
  Normalize();
}

void RangeEncoder::Normalize() {
  while (true) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      range_ = (0u - low_) & (kBottom - 1);
    }
    out_.push_back(static_cast<uint8_t>(low_ >> 24));
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeEncoder::EncodeSymbol(const Cdf& cdf, int32_t symbol) {
  if (symbol < 0 || symbol + 1 >= static_cast<int32_t>(cdf.size())) {
    throw ContractError("symbol " + std::to_string(symbol) +
                        " outside table support");
  }
  Encode(cdf[symbol], cdf[symbol + 1] - cdf[symbol]);
}

void RangeEncoder::EncodeBits(uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) {
    Encode(((value >> i) & 1u) ? kCdfTotal / 2 : 0, kCdfTotal / 2);
  }
}

std::vector<uint8_t> RangeEncoder::Finish() {
  const uint64_t low = low_;
  const uint64_t high = low + range_;  // Exclusive; never exceeds 2^32.
  for (int k = 0; k <= 4; ++k) {
    const uint64_t unit = uint64_t{1} << (32 - 8 * k);
    const uint64_t v = (low + unit - 1) / unit * unit;
    if (v < high) {
      for (int b = 0; b < k; ++b) {
        out_.push_back(static_cast<uint8_t>(v >> (24 - 8 * b)));
      }
      break;
    }
  }
  std::vector<uint8_t> result = std::move(out_);
  out_.clear();
  low_ = 0;
  range_ = 0xFFFFFFFFu;
  return result;
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ < bytes_.size()) return bytes_[pos_++];
  if (++phantom_ > 4) throw StreamError("range decoder: payload exhausted");
  return 0;
}

uint32_t RangeDecoder::Target() {
  step_ = range_ >> kCdfPrecision;
  const uint32_t t = (code_ - low_) / step_;
  if (t >= kCdfTotal) throw StreamError("range decoder: corrupt payload");
  return t;
}

void RangeDecoder::Consume(uint32_t cum_freq, uint32_t freq) {
  low_ += cum_freq * step_;
  range_ = step_ * freq;
  while (true) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBottom) break;
      range_ = (0u - low_) & (kBottom - 1);
    }
    code_ = (code_ << 8) | NextByte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

int32_t RangeDecoder::DecodeSymbol(const Cdf& cdf) {
  const uint32_t t = Target();
  // Last s with cdf[s] <= t.
  auto it = std::upper_bound(cdf.begin(), cdf.end(), t);
  const int32_t s = static_cast<int32_t>(it - cdf.begin()) - 1;
  if (s < 0 || s + 1 >= static_cast<int32_t>(cdf.size())) {
    throw StreamError("range decoder: target outside table");
  }
  Consume(cdf[s], cdf[s + 1] - cdf[s]);
  return s;
}

uint32_t RangeDecoder::DecodeBits(int count) {
  uint32_t v = 0;
  for (int i = 0; i < count; ++i) {
    const uint32_t bit = Target() >= kCdfTotal / 2 ? 1u : 0u;
    Consume(bit ? kCdfTotal / 2 : 0, kCdfTotal / 2);
    v = (v << 1) | bit;
  }
  return v;
}

double Payload::total_estimated_bits() const {
  double total = 0.0;
  for (double b : estimated_bits) total += b;
  return total;
}

Payload EncodeRange(std::span<const int32_t> symbols, std::span<const Cdf> cdfs) {
  if (symbols.size() != cdfs.size()) {
    throw ContractError("encode_range: one CDF per symbol required");
  }
  RangeEncoder enc;
  Payload p;
  p.symbol_count = static_cast<int64_t>(symbols.size());
  p.estimated_bits.reserve(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    ValidateCdf(cdfs[i]);
    enc.EncodeSymbol(cdfs[i], symbols[i]);
    const uint32_t f = cdfs[i][symbols[i] + 1] - cdfs[i][symbols[i]];
    p.estimated_bits.push_back(kCdfPrecision - std::log2(static_cast<double>(f)));
  }
  p.bytes = enc.Finish();
  return p;
}

std::vector<int32_t> DecodeRange(
    std::span<const uint8_t> bytes, int64_t count,
    const std::function<const Cdf&(int64_t, std::span<const int32_t>)>& cdf_for) {
  RangeDecoder dec(bytes);
  std::vector<int32_t> out;
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    const Cdf& cdf = cdf_for(i, out);
    ValidateCdf(cdf);
    out.push_back(dec.DecodeSymbol(cdf));
  }
  return out;
}

std::vector<int32_t> DecodeRange(std::span<const uint8_t> bytes,
                                 std::span<const Cdf> cdfs) {
  return DecodeRange(bytes, static_cast<int64_t>(cdfs.size()),
                     [&](int64_t i, std::span<const int32_t>) -> const Cdf& {
                       return cdfs[i];
                     });
}

GaussianTable MakeGaussianTable(double mean, double scale) {
  CheckFinite("gaussian table", mean);
  CheckFinite("gaussian table", scale);
  if (scale <= 0) throw ContractError("gaussian table: scale must be positive");
  const double center = std::round(mean);
  if (std::abs(center) > 1e9) throw NumericError("gaussian table: mean too large");
  const int32_t half = static_cast<int32_t>(
      std::clamp(std::ceil(kTailSigmas * scale) + 1.0, 1.0,
                 static_cast<double>(kMaxHalfWidth)));
  GaussianTable table;
  table.offset = static_cast<int32_t>(center) - half;
  const int32_t n = 2 * half + 1;
  // Reserving one count per bin (and the escape) keeps every frequency at
  // or below p * 2^16, so no symbol is coded cheaper than its model cost.
  const double budget = static_cast<double>(kCdfTotal) - (n + 1);
  table.cdf.resize(n + 2);
  table.cdf[0] = 0;
  for (int32_t k = 0; k < n; ++k) {
    const double p = RawMass(table.offset + k, mean, scale);
    const uint32_t f =
        std::max<uint32_t>(1, static_cast<uint32_t>(std::floor(p * budget)));
    table.cdf[k + 1] = table.cdf[k] + f;
  }
  table.cdf[n + 1] = kCdfTotal;
  return table;
}

void EncodeGaussianValue(RangeEncoder& enc, const GaussianTable& table,
                         int32_t value) {
  const int64_t idx = static_cast<int64_t>(value) - table.offset;
  const int32_t n = table.value_bins();
  if (idx >= 0 && idx < n) {
    enc.EncodeSymbol(table.cdf, static_cast<int32_t>(idx));
    return;
  }
  enc.EncodeSymbol(table.cdf, n);
  const bool above = idx >= n;
  const uint64_t dist = above ? static_cast<uint64_t>(idx - n)
                              : static_cast<uint64_t>(-idx - 1);
  enc.EncodeBits(above ? 1u : 0u, 1);
  // Exp-Golomb order 0 of dist.
  const uint64_t v = dist + 1;
  int len = 0;
  while ((v >> (len + 1)) != 0) ++len;
  if (len > 31) throw ContractError("escape value too large");
  enc.EncodeBits(0, len);
  enc.EncodeBits(static_cast<uint32_t>(v), len + 1);
}

int32_t DecodeGaussianValue(RangeDecoder& dec, const GaussianTable& table) {
  const int32_t s = dec.DecodeSymbol(table.cdf);
  const int32_t n = table.value_bins();
  if (s < n) return table.offset + s;
  const bool above = dec.DecodeBits(1) != 0;
  int len = 0;
  while (dec.DecodeBits(1) == 0) {
    if (++len > 31) throw StreamError("corrupt escape code");
  }
  const uint64_t v = (uint64_t{1} << len) | (len > 0 ? dec.DecodeBits(len) : 0u);
  const int64_t dist = static_cast<int64_t>(v - 1);
  const int64_t value = above ? static_cast<int64_t>(table.offset) + n + dist
                              : static_cast<int64_t>(table.offset) - 1 - dist;
  return static_cast<int32_t>(value);
}

namespace {

int32_t ToSymbol(double v) {
  if (!std::isfinite(v) || std::abs(v) > 2e9 || v != std::round(v)) {
    throw ContractError("latent value is not a representable integer");
  }
  return static_cast<int32_t>(v);
}

}  // namespace

template <typename T>
Payload EncodeGaussianTensor(const Tensor<T>& values, const Tensor<T>& mean,
                             const Tensor<T>& scale) {
  if (values.shape() != mean.shape() || values.shape() != scale.shape()) {
    throw DimensionError("gaussian coding: shape mismatch");
  }
  auto v = values.values();
  auto m = mean.values();
  auto s = scale.values();
  RangeEncoder enc;
  Payload p;
  p.symbol_count = values.numel();
  p.estimated_bits.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    const int32_t sym = ToSymbol(v[i]);
    EncodeGaussianValue(enc, MakeGaussianTable(m[i], s[i]), sym);
    p.estimated_bits.push_back(-std::log2(DiscretizedGaussianMass(sym, m[i], s[i])));
  }
  p.bytes = enc.Finish();
  return p;
}

template <typename T>
Tensor<T> DecodeGaussianTensor(std::span<const uint8_t> bytes,
                               const Tensor<T>& mean, const Tensor<T>& scale) {
  if (mean.shape() != scale.shape()) {
    throw DimensionError("gaussian decoding: shape mismatch");
  }
  auto m = mean.values();
  auto s = scale.values();
  RangeDecoder dec(bytes);
  std::vector<T> out(m.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(DecodeGaussianValue(dec, MakeGaussianTable(m[i], s[i])));
  }
  return Tensor<T>(mean.shape(), std::move(out));
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> ContextParams(const Network<T>& context,
                                              const Tensor<T>& z_hat) {
  const int64_t zc = z_hat.shape().c;
  Tensor<T> out = context.Forward(z_hat);
  if (out.shape().c != 2 * zc) {
    throw DimensionError("context model must emit 2x the hyper channels");
  }
  return {SliceChannels(out, 0, zc), ScaleFromRaw(SliceChannels(out, zc, 2 * zc))};
}

namespace {

// Runs |code_position| for each raster position with the context parameters
// computed from |partial| (positions >= p zeroed at call time).
template <typename T, typename Fn>
void ForEachContextPosition(const Network<T>& context, const Shape& shape,
                            std::vector<T>& partial, Fn&& code_position) {
  NoGradGuard no_grad;
  const int64_t plane = shape.plane();
  for (int64_t n = 0; n < shape.n; ++n) {
    for (int64_t pos = 0; pos < plane; ++pos) {
      Tensor<T> z(shape, partial);
      auto [mean, scale] = ContextParams(context, z);
      for (int64_t c = 0; c < shape.c; ++c) {
        const int64_t idx = (n * shape.c + c) * plane + pos;
        code_position(idx, static_cast<double>(mean.values()[idx]),
                      static_cast<double>(scale.values()[idx]));
      }
    }
  }
}

}  // namespace

template <typename T>
Payload EncodeHyperContext(const Tensor<T>& z_hat, const Network<T>& context) {
  const Shape shape = z_hat.shape();
  auto zv = z_hat.values();
  std::vector<T> partial(zv.size(), T(0));
  RangeEncoder enc;
  Payload p;
  p.symbol_count = z_hat.numel();
  ForEachContextPosition<T>(context, shape, partial,
                            [&](int64_t idx, double mean, double scale) {
                              const int32_t sym = ToSymbol(zv[idx]);
                              EncodeGaussianValue(enc, MakeGaussianTable(mean, scale), sym);
                              p.estimated_bits.push_back(
                                  -std::log2(DiscretizedGaussianMass(sym, mean, scale)));
                              partial[idx] = zv[idx];
                            });
  p.bytes = enc.Finish();
  return p;
}

template <typename T>
Tensor<T> DecodeHyperContext(std::span<const uint8_t> bytes, const Shape& shape,
                             const Network<T>& context) {
  std::vector<T> partial(shape.numel(), T(0));
  RangeDecoder dec(bytes);
  ForEachContextPosition<T>(context, shape, partial,
                            [&](int64_t idx, double mean, double scale) {
                              partial[idx] = static_cast<T>(
                                  DecodeGaussianValue(dec, MakeGaussianTable(mean, scale)));
                            });
  return Tensor<T>(shape, std::move(partial));
}

#define GDC_INSTANTIATE(T)                                                    \
  template Tensor<T> Quantize(const Tensor<T>&, QuantMode, uint64_t);         \
  template Tensor<T> GaussianBits(const Tensor<T>&, const Tensor<T>&,         \
                                  const Tensor<T>&);                          \
  template Tensor<T> ScaleFromRaw(const Tensor<T>&);                          \
  template Payload EncodeGaussianTensor(const Tensor<T>&, const Tensor<T>&,   \
                                        const Tensor<T>&);                    \
  template Tensor<T> DecodeGaussianTensor(std::span<const uint8_t>,           \
                                          const Tensor<T>&, const Tensor<T>&); \
  template std::pair<Tensor<T>, Tensor<T>> ContextParams(const Network<T>&,   \
                                                         const Tensor<T>&);   \
  template Payload EncodeHyperContext(const Tensor<T>&, const Network<T>&);   \
  template Tensor<T> DecodeHyperContext(std::span<const uint8_t>,             \
                                        const Shape&, const Network<T>&);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
