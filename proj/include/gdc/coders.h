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

// Inter-frame coders built on a four-layer autoencoder with a mean-scale
// hyperprior:
//
//   diff      r = x - x~,             x^_d = x~ + dec(y^)
//   codecnet  enc(x, x~),             x^   = dec(y^, pred(x~))
//   gdc       g = GD(x, x~),          x^_g = GS(x~, dec(y^))
//   xgdc      [r, GD(x, x~)] (3+16),  x^_d = x~ + dec(y^)[:3],
//                                     x^_g = GS(x~, dec(y^))
//
// Frames are [1, 3, H, W] with H and W multiples of 16.

#ifndef GDC_CODERS_H_
#define GDC_CODERS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "gdc/entropy.h"
#include "gdc/layers.h"
#include "gdc/tensor.h"

namespace gdc {

inline constexpr int64_t kFrameAlignment = 16;

enum class CoderKind : uint8_t { kDiff = 0, kCodecNet = 1, kGdc = 2, kXgdc = 3 };

struct CoderConfig {
  CoderKind kind = CoderKind::kDiff;
  int64_t hidden = 64;  // N: autoencoder and hyper-network width.
  int64_t latent = 64;  // Y
  int64_t hyper = 32;   // Z
  int64_t prediction_latent = 192;  // Yp, CodecNet only.
  // GD starts as x - x~ and GS as x~ + g (GDC and xGDC).
  bool identity_init = true;

  int64_t g_channels() const;
  // Channels entering the core encoder / leaving the core decoder.
  int64_t core_in_channels() const;
  int64_t core_out_channels() const;
  void Validate() const;
};

// "diff", "gdc", "xgdc", "codecnet-<Yp>".
std::string CoderName(const CoderConfig& config);
// Parses a name produced by CoderName into |config| (kind and Yp only).
void ParseCoderName(const std::string& name, CoderConfig& config);

template <typename T>
struct CoderOutput {
  // Additive-path reconstruction (diff, xgdc), also CodecNet's only output.
  std::optional<Tensor<T>> x_hat_d;
  // Generalized-sum reconstruction (gdc, xgdc).
  std::optional<Tensor<T>> x_hat_g;
  Tensor<T> rate_y;  // Scalar, bits.
  Tensor<T> rate_z;
  Tensor<T> y_hat;
  Tensor<T> z_hat;

  Tensor<T> rate() const;
  double total_bits() const;
};

template <typename T>
struct EncodedFrame {
  Payload z;
  Payload y;
  std::optional<Tensor<T>> x_hat_d;
  std::optional<Tensor<T>> x_hat_g;
};

template <typename T>
struct DecodedFrame {
  std::optional<Tensor<T>> x_hat_d;
  std::optional<Tensor<T>> x_hat_g;
};

template <typename T>
class Coder {
 public:
  // Builds all networks from |seed|. Core and prior networks are created
  // first, so coders of different kinds with the same seed and dims share
  // identical core weights wherever shapes agree.
  Coder(const CoderConfig& config, uint64_t seed);

  const CoderConfig& config() const { return config_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  // Training/analysis pass. kNoise draws y and z noise from streams derived
  // from |seed|; kRound gives the values a decoder reproduces.
  CoderOutput<T> Forward(const Tensor<T>& x, const Tensor<T>& x_tilde,
                         QuantMode mode, uint64_t seed = 0) const;

  // Entropy-codes one aligned frame; the reconstructions are produced by the
  // decoder-side synthesis from the coded latents.
  EncodedFrame<T> Encode(const Tensor<T>& x, const Tensor<T>& x_tilde) const;
  // Sees only the prediction and the payloads.
  DecodedFrame<T> Decode(const Tensor<T>& x_tilde,
                         std::span<const uint8_t> z_bytes,
                         std::span<const uint8_t> y_bytes) const;

  Tensor<T> GdApply(const Tensor<T>& x, const Tensor<T>& x_tilde) const;
  Tensor<T> GsApply(const Tensor<T>& x_tilde, const Tensor<T>& g_hat) const;

  Shape LatentShape(int64_t height, int64_t width) const;
  Shape HyperShape(int64_t height, int64_t width) const;

 private:
  struct Prior {
    Tensor<T> mean;
    Tensor<T> scale;
  };

  Tensor<T> CoreInput(const Tensor<T>& x, const Tensor<T>& x_tilde) const;
  Prior LatentPrior(const Tensor<T>& z_hat, const Shape& y_shape) const;
  // Decoder side: reconstructions from the prediction and the latent.
  DecodedFrame<T> Synthesize(const Tensor<T>& x_tilde, const Tensor<T>& y_hat) const;
  void CheckFrames(const Tensor<T>& x, const Tensor<T>& x_tilde) const;
  void CheckFrame(const Tensor<T>& frame, const char* what) const;

  CoderConfig config_;
  ParamStore<T> params_;
  Network<T> encoder_;
  Network<T> decoder_;
  Network<T> hyper_encoder_;
  Network<T> hyper_decoder_;
  Network<T> context_;
  Network<T> gd_;
  Network<T> gs_;
  Network<T> prediction_;
};

// Learnable parameter count of a configuration.
int64_t CountParameters(const CoderConfig& config);

// Recovers dims and kind from parameter shapes (see Coder naming).
template <typename T>
CoderConfig InferConfig(const ParamStore<T>& params);

}  // namespace gdc

#endif  // GDC_CODERS_H_
