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

#ifndef GDC_OPS_H_
#define GDC_OPS_H_

#include <cmath>
#include <cstdint>
#include <span>

#include "gdc/tensor.h"

namespace gdc {

// Elementwise arithmetic on equal shapes (no broadcasting).
template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Scale(const Tensor<T>& a, double factor);
template <typename T>
Tensor<T> AddScalar(const Tensor<T>& a, double offset);
template <typename T>
Tensor<T> Square(const Tensor<T>& a);
// log(1 + exp(x)), evaluated without overflow.
template <typename T>
Tensor<T> Softplus(const Tensor<T>& a);

// Channel concatenation; all parts share N, H, W.
template <typename T>
Tensor<T> ConcatChannels(std::span<const Tensor<T>> parts);
template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& a, const Tensor<T>& b);
// Channels [begin, end).
template <typename T>
Tensor<T> SliceChannels(const Tensor<T>& a, int64_t begin, int64_t end);
// Top-left spatial window of size height x width.
template <typename T>
Tensor<T> CropSpatial(const Tensor<T>& a, int64_t height, int64_t width);

template <typename T>
Tensor<T> Sum(const Tensor<T>& a);
template <typename T>
Tensor<T> Mean(const Tensor<T>& a);

// Rounds half away from zero; the gradient is passed straight through.
template <typename T>
Tensor<T> RoundStraightThrough(const Tensor<T>& a);

// Dispatcher over the registered elementwise kinds. Scale uses args[0];
// slice-channels uses args[0], args[1] as [begin, end).
enum class ElementwiseKind { kAdd, kSub, kMul, kScale, kConcatChannels,
                             kSliceChannels };

template <typename T>
Tensor<T> Elementwise(ElementwiseKind kind, std::span<const Tensor<T>> operands,
                      std::span<const double> args = {});

// Half-away-from-zero rounding of a scalar.
inline double RoundHalfAway(double v) { return std::round(v); }

}  // namespace gdc

#endif  // GDC_OPS_H_
