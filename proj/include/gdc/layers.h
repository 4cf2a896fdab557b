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

// Convolutional building blocks and declarative network construction.
//
// Parameter layouts:
//   conv2d weight   [out, in, k, k], bias [out, 1, 1, 1]
//   tconv2d weight  [in, out, k, k], bias [out, 1, 1, 1]
//   gdn beta        [C, 1, 1, 1],    gamma [C, C, 1, 1]
//   prelu slope     [C, 1, 1, 1]
// Padding is always (k - 1) / 2 with zeros, so a down layer maps H to
// ceil(H / s) and an up layer maps H to H * s.

#ifndef GDC_LAYERS_H_
#define GDC_LAYERS_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gdc/tensor.h"

namespace gdc {

inline constexpr double kGdnBetaMin = 1e-6;

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride);

// Adjoint of Conv2d with the same weight and stride; output is H*s x W*s.
template <typename T>
Tensor<T> TConv2d(const Tensor<T>& x, const Tensor<T>& weight,
                  const Tensor<T>& bias, int stride);

// y_i = x_i * (beta_i + sum_j gamma_ij x_j^2)^(-1/2), or ^(+1/2) when
// |inverse|. |beta| and |gamma| are the effective (already reparameterized)
// values.
template <typename T>
Tensor<T> Gdn(const Tensor<T>& x, const Tensor<T>& beta, const Tensor<T>& gamma,
              bool inverse);

template <typename T>
Tensor<T> Prelu(const Tensor<T>& x, const Tensor<T>& slope);

enum class MaskKind : uint8_t { kNone, kA, kB };

// Raster-causal kernel mask: kA zeroes the centre tap and everything after
// it, kB keeps the centre tap.
template <typename T>
Tensor<T> CausalMask(int64_t out_channels, int64_t in_channels, int kernel,
                     MaskKind kind);

// Stride-1 convolution with a causal mask applied to the weights.
template <typename T>
Tensor<T> MaskedConv2d(const Tensor<T>& x, const Tensor<T>& weight,
                       const Tensor<T>& bias, MaskKind kind);

enum class Direction : uint8_t { kDown, kUp };
enum class Activation : uint8_t { kNone, kGdn, kIgdn, kPrelu };

struct ConvSpec {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int kernel = 5;
  int stride = 1;
  Direction direction = Direction::kDown;
  Activation activation = Activation::kNone;
  MaskKind mask = MaskKind::kNone;
};

enum class NetworkRole : uint8_t {
  kEncoder, kDecoder, kHyperEncoder, kHyperDecoder, kGd, kGs, kContext,
};

struct NetworkSpec {
  NetworkRole role = NetworkRole::kEncoder;
  std::vector<ConvSpec> layers;

  int64_t in_channels() const { return layers.front().in_channels; }
  int64_t out_channels() const { return layers.back().out_channels; }
  // Product of strides (down and up layers counted alike).
  int64_t total_stride() const;
  // Throws ContractError on a malformed spec.
  void Validate() const;
};

bool SpatiallyInverse(const NetworkSpec& encoder, const NetworkSpec& decoder);
int64_t OutputSize(const NetworkSpec& spec, int64_t size);

// Block builders.
NetworkSpec EncoderSpec(int64_t in, int64_t hidden, int64_t latent);
NetworkSpec DecoderSpec(int64_t latent, int64_t hidden, int64_t out);
NetworkSpec HyperEncoderSpec(int64_t latent, int64_t hidden, int64_t hyper);
NetworkSpec HyperDecoderSpec(int64_t hyper, int64_t hidden, int64_t latent);
NetworkSpec ContextSpec(int64_t hyper);
// Three 5x5 stride-1 layers 6 -> 16 -> 16 -> |out| with PReLU after each.
NetworkSpec GdSpec(int64_t out);
// (3 + |g_channels|) -> 16 -> 16 -> 3 with PReLU after each.
NetworkSpec GsSpec(int64_t g_channels);
// Four stride-2 5x5 layers of width |latent| on a 3-channel frame.
NetworkSpec PredictionEncoderSpec(int64_t latent);

// Named, ordered collection of learnable leaves.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& Add(const std::string& name, Tensor<T> value);
  bool Contains(const std::string& name) const;
  const Tensor<T>& Get(const std::string& name) const;
  Tensor<T>& Get(const std::string& name);

  std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }
  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const {
    return entries_;
  }
  int64_t CountParameters() const;
  int64_t CountParameters(const std::string& prefix) const;
  void ZeroGrad();
  // Copies values of every same-named, same-shaped entry of |other|.
  // Returns the number of tensors copied.
  int CopyMatching(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

enum class NetworkInit : uint8_t { kRandom, kIdentityDifference, kIdentitySum };

template <typename T>
class Network {
 public:
  Network() = default;
  const NetworkSpec& spec() const { return spec_; }
  Tensor<T> Forward(const Tensor<T>& x) const;
  // Applies only layers [0, count).
  Tensor<T> ForwardPrefix(const Tensor<T>& x, size_t count) const;

 private:
  template <typename U>
  friend Network<U> MakeNetwork(const NetworkSpec&, ParamStore<U>&,
                                const std::string&, NetworkInit,
                                std::mt19937_64&);

  struct Layer {
    Tensor<T> weight;
    Tensor<T> bias;
    Tensor<T> gdn_beta;   // Raw; effective beta = raw^2 + kGdnBetaMin.
    Tensor<T> gdn_gamma;  // Raw; effective gamma = raw^2.
    Tensor<T> slope;
  };

  NetworkSpec spec_;
  std::vector<Layer> layers_;
};

// Registers the parameters of |spec| under |prefix| and returns the network.
template <typename T>
Network<T> MakeNetwork(const NetworkSpec& spec, ParamStore<T>& params,
                       const std::string& prefix, NetworkInit init,
                       std::mt19937_64& rng);

// Learnable parameter count implied by a spec.
int64_t CountParameters(const NetworkSpec& spec);

}  // namespace gdc

#endif  // GDC_LAYERS_H_
