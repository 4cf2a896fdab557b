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

#include "gdc/ops.h"

#include <cmath>
#include <string>
#include <vector>

#include "gdc/error.h"

namespace gdc {

namespace {

template <typename T>
void RequireSameShape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         a.shape().ToString() + " vs " + b.shape().ToString());
  }
}

template <typename T>
using NodeT = internal::Node<T>;

}  // namespace

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape("add", a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return MakeResult<T>("add", a.shape(), std::move(out), {a, b},
                       [](NodeT<T>& self) {
                         for (auto& in : self.inputs) {
                           if (!in->requires_grad) continue;
                           auto& g = in->MutableGrad();
                           for (size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[i];
                         }
                       });
}

template <typename T>
Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape("sub", a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return MakeResult<T>(
      "sub", a.shape(), std::move(out), {a, b}, [](NodeT<T>& self) {
        if (self.inputs[0]->requires_grad) {
          auto& g = self.inputs[0]->MutableGrad();
          for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.inputs[1]->requires_grad) {
          auto& g = self.inputs[1]->MutableGrad();
          for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape("mul", a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return MakeResult<T>(
      "mul", a.shape(), std::move(out), {a, b}, [](NodeT<T>& self) {
        auto& a = *self.inputs[0];
        auto& b = *self.inputs[1];
        if (a.requires_grad) {
          auto& g = a.MutableGrad();
          for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.value[i];
        }
        if (b.requires_grad) {
          auto& g = b.MutableGrad();
          for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.value[i];
        }
      });
}

template <typename T>
Tensor<T> Scale(const Tensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  auto av = a.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * f;
  return MakeResult<T>("scale", a.shape(), std::move(out), {a},
                       [f](NodeT<T>& self) {
                         auto& g = self.inputs[0]->MutableGrad();
                         for (size_t i = 0; i < g.size(); ++i)
                           g[i] += self.grad[i] * f;
                       });
}

template <typename T>
Tensor<T> AddScalar(const Tensor<T>& a, double offset) {
  const T o = static_cast<T>(offset);
  auto av = a.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + o;
  return MakeResult<T>("add_scalar", a.shape(), std::move(out), {a},
                       [](NodeT<T>& self) {
                         auto& g = self.inputs[0]->MutableGrad();
                         for (size_t i = 0; i < g.size(); ++i)
                           g[i] += self.grad[i];
                       });
}

template <typename T>
Tensor<T> Square(const Tensor<T>& a) {
  auto av = a.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * av[i];
  return MakeResult<T>("square", a.shape(), std::move(out), {a},
                       [](NodeT<T>& self) {
                         auto& in = *self.inputs[0];
                         auto& g = in.MutableGrad();
                         for (size_t i = 0; i < g.size(); ++i)
                           g[i] += T(2) * in.value[i] * self.grad[i];
                       });
}

template <typename T>
Tensor<T> Softplus(const Tensor<T>& a) {
  auto av = a.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = static_cast<T>(std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))));
  }
  return MakeResult<T>("softplus", a.shape(), std::move(out), {a},
                       [](NodeT<T>& self) {
                         auto& in = *self.inputs[0];
                         auto& g = in.MutableGrad();
                         for (size_t i = 0; i < g.size(); ++i) {
                           const double x = in.value[i];
                           const double sig = 1.0 / (1.0 + std::exp(-x));
                           g[i] += static_cast<T>(sig) * self.grad[i];
                         }
                       });
}

template <typename T>
Tensor<T> ConcatChannels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ContractError("concat-channels: no operands");
  Shape out_shape = parts[0].shape();
  out_shape.c = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != out_shape.n || s.h != out_shape.h || s.w != out_shape.w) {
      throw DimensionError("concat-channels: shape mismatch " +
                           parts[0].shape().ToString() + " vs " + s.ToString());
    }
    out_shape.c += s.c;
  }
  const int64_t plane = out_shape.plane();
  std::vector<T> out(out_shape.numel());
  std::vector<int64_t> offsets;
  int64_t c_off = 0;
  for (const auto& p : parts) {
    offsets.push_back(c_off);
    auto v = p.values();
    const int64_t pc = p.shape().c;
    for (int64_t n = 0; n < out_shape.n; ++n) {
      std::copy_n(v.begin() + n * pc * plane, pc * plane,
                  out.begin() + (n * out_shape.c + c_off) * plane);
    }
    c_off += pc;
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return MakeResult<T>(
      "concat_channels", out_shape, std::move(out), std::move(inputs),
      [offsets, out_shape, plane](NodeT<T>& self) {
        for (size_t k = 0; k < self.inputs.size(); ++k) {
          auto& in = *self.inputs[k];
          if (!in.requires_grad) continue;
          auto& g = in.MutableGrad();
          const int64_t pc = in.shape.c;
          for (int64_t n = 0; n < out_shape.n; ++n) {
            const T* src = self.grad.data() + (n * out_shape.c + offsets[k]) * plane;
            T* dst = g.data() + n * pc * plane;
            for (int64_t i = 0; i < pc * plane; ++i) dst[i] += src[i];
          }
        }
      });
}

template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& a, const Tensor<T>& b) {
  const Tensor<T> parts[] = {a, b};
  return ConcatChannels<T>(std::span<const Tensor<T>>(parts));
}

template <typename T>
Tensor<T> SliceChannels(const Tensor<T>& a, int64_t begin, int64_t end) {
  const Shape& s = a.shape();
  if (begin < 0 || end > s.c || begin >= end) {
    throw DimensionError("slice-channels: range [" + std::to_string(begin) +
                         "," + std::to_string(end) + ") outside " +
                         s.ToString());
  }
  Shape out_shape = s;
  out_shape.c = end - begin;
  const int64_t plane = s.plane();
  std::vector<T> out(out_shape.numel());
  auto v = a.values();
  for (int64_t n = 0; n < s.n; ++n) {
    std::copy_n(v.begin() + (n * s.c + begin) * plane, out_shape.c * plane,
                out.begin() + n * out_shape.c * plane);
  }
  return MakeResult<T>(
      "slice_channels", out_shape, std::move(out), {a},
      [s, out_shape, begin, plane](NodeT<T>& self) {
        auto& g = self.inputs[0]->MutableGrad();
        for (int64_t n = 0; n < s.n; ++n) {
          const T* src = self.grad.data() + n * out_shape.c * plane;
          T* dst = g.data() + (n * s.c + begin) * plane;
          for (int64_t i = 0; i < out_shape.c * plane; ++i) dst[i] += src[i];
        }
      });
}

template <typename T>
Tensor<T> CropSpatial(const Tensor<T>& a, int64_t height, int64_t width) {
  const Shape& s = a.shape();
  if (height <= 0 || width <= 0 || height > s.h || width > s.w) {
    throw DimensionError("crop: window " + std::to_string(height) + "x" +
                         std::to_string(width) + " outside " + s.ToString());
  }
  if (height == s.h && width == s.w) return a;
  const Shape out_shape{s.n, s.c, height, width};
  std::vector<T> out(out_shape.numel());
  auto v = a.values();
  for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
    for (int64_t y = 0; y < height; ++y) {
      std::copy_n(v.begin() + (nc * s.h + y) * s.w, width,
                  out.begin() + (nc * height + y) * width);
    }
  }
  return MakeResult<T>(
      "crop", out_shape, std::move(out), {a},
      [s, height, width](NodeT<T>& self) {
        auto& g = self.inputs[0]->MutableGrad();
        for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
          for (int64_t y = 0; y < height; ++y) {
            for (int64_t x = 0; x < width; ++x) {
              g[(nc * s.h + y) * s.w + x] +=
                  self.grad[(nc * height + y) * width + x];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> Sum(const Tensor<T>& a) {
  double acc = 0.0;
  for (T v : a.values()) acc += v;
  return MakeResult<T>("sum", {1, 1, 1, 1}, {static_cast<T>(acc)}, {a},
                       [](NodeT<T>& self) {
                         auto& g = self.inputs[0]->MutableGrad();
                         const T s = self.grad[0];
                         for (auto& gi : g) gi += s;
                       });
}

template <typename T>
Tensor<T> Mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw ContractError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.numel()));
}

template <typename T>
Tensor<T> RoundStraightThrough(const Tensor<T>& a) {
  auto av = a.values();
  std::vector<T> out(av.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(std::round(av[i]));
  return MakeResult<T>("round", a.shape(), std::move(out), {a},
                       [](NodeT<T>& self) {
                         auto& g = self.inputs[0]->MutableGrad();
                         for (size_t i = 0; i < g.size(); ++i)
                           g[i] += self.grad[i];
                       });
}

template <typename T>
Tensor<T> Elementwise(ElementwiseKind kind, std::span<const Tensor<T>> operands,
                      std::span<const double> args) {
  auto need = [&](size_t n_ops, size_t n_args, const char* name) {
    if (operands.size() != n_ops || args.size() < n_args) {
      throw ContractError(std::string(name) + ": wrong operand/arg count");
    }
  };
  switch (kind) {
    case ElementwiseKind::kAdd:
      need(2, 0, "add");
      return Add(operands[0], operands[1]);
    case ElementwiseKind::kSub:
      need(2, 0, "sub");
      return Sub(operands[0], operands[1]);
    case ElementwiseKind::kMul:
      need(2, 0, "mul");
      return Mul(operands[0], operands[1]);
    case ElementwiseKind::kScale:
      need(1, 1, "scale");
      return Scale(operands[0], args[0]);
    case ElementwiseKind::kConcatChannels:
      return ConcatChannels<T>(operands);
    case ElementwiseKind::kSliceChannels:
      need(1, 2, "slice-channels");
      return SliceChannels(operands[0], static_cast<int64_t>(args[0]),
                           static_cast<int64_t>(args[1]));
  }
  throw ContractError("unknown elementwise kind");
}

#define GDC_INSTANTIATE(T)                                                    \
  template Tensor<T> Add(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> Sub(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> Mul(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> Scale(const Tensor<T>&, double);                         \
  template Tensor<T> AddScalar(const Tensor<T>&, double);                     \
  template Tensor<T> Square(const Tensor<T>&);                                \
  template Tensor<T> Softplus(const Tensor<T>&);                              \
  template Tensor<T> ConcatChannels(std::span<const Tensor<T>>);              \
  template Tensor<T> ConcatChannels(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> SliceChannels(const Tensor<T>&, int64_t, int64_t);       \
  template Tensor<T> CropSpatial(const Tensor<T>&, int64_t, int64_t);         \
  template Tensor<T> Sum(const Tensor<T>&);                                   \
  template Tensor<T> Mean(const Tensor<T>&);                                  \
  template Tensor<T> RoundStraightThrough(const Tensor<T>&);                  \
  template Tensor<T> Elementwise(ElementwiseKind, std::span<const Tensor<T>>, \
                                 std::span<const double>);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
