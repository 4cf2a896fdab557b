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

// Quantization, discretized Gaussian entropy models and a carry-less 32-bit
// range coder with 16-bit frequency tables.

#ifndef GDC_ENTROPY_H_
#define GDC_ENTROPY_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gdc/layers.h"
#include "gdc/tensor.h"

namespace gdc {

inline constexpr double kScaleMin = 0.11;
inline constexpr int kCdfPrecision = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecision;
// Probability floor of the rate model; caps one symbol at 16 bits.
inline constexpr double kMinProbability = 1.0 / kCdfTotal;

enum class QuantMode : uint8_t { kNoise, kRound };

// kNoise adds i.i.d. U[-0.5, 0.5) drawn from |seed| (training proxy);
// kRound rounds half away from zero. Both pass gradients straight through.
template <typename T>
Tensor<T> Quantize(const Tensor<T>& y, QuantMode mode, uint64_t seed);

// Probability mass of the unit bin around |value| under N(mean, scale^2),
// clamped below at kMinProbability.
double DiscretizedGaussianMass(double value, double mean, double scale);

// Per-element -log2 of DiscretizedGaussianMass; differentiable in all three
// arguments (zero gradient where the clamp is active).
template <typename T>
Tensor<T> GaussianBits(const Tensor<T>& y_hat, const Tensor<T>& mean,
                       const Tensor<T>& scale);

// Maps raw network outputs to scales >= kScaleMin.
template <typename T>
Tensor<T> ScaleFromRaw(const Tensor<T>& raw);

// Cumulative frequency table: cdf[0] = 0, cdf.back() = kCdfTotal, strictly
// increasing. Symbol s occupies [cdf[s], cdf[s + 1]).
using Cdf = std::vector<uint32_t>;
void ValidateCdf(const Cdf& cdf);

class RangeEncoder {
 public:
  void Encode(uint32_t cum_freq, uint32_t freq);
  void EncodeSymbol(const Cdf& cdf, int32_t symbol);
  // |count| equiprobable bits, most significant first.
  void EncodeBits(uint32_t value, int count);
  // Emits the shortest tail that identifies the final interval.
  std::vector<uint8_t> Finish();

 private:
  void Normalize();

  uint32_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);
  int32_t DecodeSymbol(const Cdf& cdf);
  uint32_t DecodeBits(int count);

 private:
  uint32_t Target();
  void Consume(uint32_t cum_freq, uint32_t freq);
  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  int phantom_ = 0;  // Zero bytes read past the end.
  uint32_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
  uint32_t step_ = 0;
};

struct Payload {
  std::vector<uint8_t> bytes;
  int64_t symbol_count = 0;
  std::vector<double> estimated_bits;  // Per symbol.

  double total_estimated_bits() const;
  int64_t bits() const { return static_cast<int64_t>(bytes.size()) * 8; }
};

// Codes table indices; symbols[i] uses cdfs[i]. estimated_bits holds the
// ideal cost under each table.
Payload EncodeRange(std::span<const int32_t> symbols, std::span<const Cdf> cdfs);

// Sequential decoder: |cdf_for| may depend on the symbols decoded so far.
std::vector<int32_t> DecodeRange(
    std::span<const uint8_t> bytes, int64_t count,
    const std::function<const Cdf&(int64_t, std::span<const int32_t>)>& cdf_for);
std::vector<int32_t> DecodeRange(std::span<const uint8_t> bytes,
                                 std::span<const Cdf> cdfs);

// Quantized discretized Gaussian over [offset, offset + n) plus an escape
// bin (index n) for values outside; escaped values follow as sign and
// Exp-Golomb bits.
struct GaussianTable {
  int32_t offset = 0;
  Cdf cdf;

  int32_t value_bins() const { return static_cast<int32_t>(cdf.size()) - 2; }
};

GaussianTable MakeGaussianTable(double mean, double scale);
void EncodeGaussianValue(RangeEncoder& enc, const GaussianTable& table,
                         int32_t value);
int32_t DecodeGaussianValue(RangeDecoder& dec, const GaussianTable& table);

// Codes integer-valued |values| element-wise with N(mean, scale^2) bins.
template <typename T>
Payload EncodeGaussianTensor(const Tensor<T>& values, const Tensor<T>& mean,
                             const Tensor<T>& scale);
template <typename T>
Tensor<T> DecodeGaussianTensor(std::span<const uint8_t> bytes,
                               const Tensor<T>& mean, const Tensor<T>& scale);

// Mean and scale of the context model for every element of |z_hat|:
// channels [0, Z) of the network output are means, [Z, 2Z) raw scales.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> ContextParams(const Network<T>& context,
                                              const Tensor<T>& z_hat);

// Raster-order coding of the hyper-latent. Position p is coded with the
// context model evaluated on a copy of z_hat in which p and every later
// position are zero, so both ends see identical inputs.
template <typename T>
Payload EncodeHyperContext(const Tensor<T>& z_hat, const Network<T>& context);
template <typename T>
Tensor<T> DecodeHyperContext(std::span<const uint8_t> bytes, const Shape& shape,
                             const Network<T>& context);

}  // namespace gdc

#endif  // GDC_ENTROPY_H_
