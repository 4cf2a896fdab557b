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

#include "gdc/coders.h"

#include <random>
#include <string>

#include "gdc/error.h"
#include "gdc/ops.h"
#include "gdc/random.h"

namespace gdc {

namespace {

constexpr int64_t kXgdcGChannels = 16;
constexpr uint64_t kNoiseStreamY = 1;
constexpr uint64_t kNoiseStreamZ = 2;

NetworkSpec CoreEncoder(const CoderConfig& c) {
  return EncoderSpec(c.core_in_channels(), c.hidden, c.latent);
}
NetworkSpec CoreDecoder(const CoderConfig& c) {
  const int64_t in = c.latent +
                     (c.kind == CoderKind::kCodecNet ? c.prediction_latent : 0);
  return DecoderSpec(in, c.hidden, c.core_out_channels());
}

}  // namespace

int64_t CoderConfig::g_channels() const {
  switch (kind) {
    case CoderKind::kGdc: return 3;
    case CoderKind::kXgdc: return kXgdcGChannels;
    default: return 0;
  }
}

int64_t CoderConfig::core_in_channels() const {
  switch (kind) {
    case CoderKind::kDiff: return 3;
    case CoderKind::kCodecNet: return 6;
    case CoderKind::kGdc: return 3;
    case CoderKind::kXgdc: return 3 + kXgdcGChannels;
  }
  throw InternalError("unknown coder kind");
}

int64_t CoderConfig::core_out_channels() const {
  return kind == CoderKind::kCodecNet ? 3 : core_in_channels();
}

void CoderConfig::Validate() const {
  if (static_cast<int>(kind) > 3) throw ContractError("unknown coder kind");
  if (hidden <= 0 || latent <= 0 || hyper <= 0) {
    throw ContractError("coder dims must be positive");
  }
  if (kind == CoderKind::kCodecNet && prediction_latent <= 0) {
    throw ContractError("codecnet needs Yp > 0");
  }
}

std::string CoderName(const CoderConfig& config) {
  switch (config.kind) {
    case CoderKind::kDiff: return "diff";
    case CoderKind::kGdc: return "gdc";
    case CoderKind::kXgdc: return "xgdc";
    case CoderKind::kCodecNet:
      return "codecnet-" + std::to_string(config.prediction_latent);
  }
  throw InternalError("unknown coder kind");
}

void ParseCoderName(const std::string& name, CoderConfig& config) {
  if (name == "diff") {
    config.kind = CoderKind::kDiff;
  } else if (name == "gdc") {
    config.kind = CoderKind::kGdc;
  } else if (name == "xgdc") {
    config.kind = CoderKind::kXgdc;
  } else if (name.rfind("codecnet-", 0) == 0) {
    config.kind = CoderKind::kCodecNet;
    try {
      size_t used = 0;
      config.prediction_latent = std::stoll(name.substr(9), &used);
      if (used != name.size() - 9) throw std::invalid_argument(name);
    } catch (const std::logic_error&) {
      throw ContractError("bad coder name '" + name + "'");
    }
  } else {
    throw ContractError("unknown coder '" + name + "'");
  }
  config.Validate();
}

template <typename T>
Tensor<T> CoderOutput<T>::rate() const {
  return Add(rate_y, rate_z);
}

template <typename T>
double CoderOutput<T>::total_bits() const {
  return static_cast<double>(rate_y.item()) + static_cast<double>(rate_z.item());
}

template <typename T>
Coder<T>::Coder(const CoderConfig& config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const auto& c = config_;
  encoder_ = MakeNetwork(CoreEncoder(c), params_, "core.enc", NetworkInit::kRandom, rng);
  decoder_ = MakeNetwork(CoreDecoder(c), params_, "core.dec", NetworkInit::kRandom, rng);
  hyper_encoder_ = MakeNetwork(HyperEncoderSpec(c.latent, c.hidden, c.hyper), params_,
                               "prior.henc", NetworkInit::kRandom, rng);
  hyper_decoder_ = MakeNetwork(HyperDecoderSpec(c.hyper, c.hidden, c.latent), params_,
                               "prior.hdec", NetworkInit::kRandom, rng);
  context_ = MakeNetwork(ContextSpec(c.hyper), params_, "prior.ctx",
                         NetworkInit::kRandom, rng);
  if (c.kind == CoderKind::kGdc || c.kind == CoderKind::kXgdc) {
    gd_ = MakeNetwork(GdSpec(c.g_channels()), params_, "gd",
                      c.identity_init ? NetworkInit::kIdentityDifference
                                      : NetworkInit::kRandom,
                      rng);
    gs_ = MakeNetwork(GsSpec(c.core_out_channels()), params_, "gs",
                      c.identity_init ? NetworkInit::kIdentitySum : NetworkInit::kRandom,
                      rng);
  }
  if (c.kind == CoderKind::kCodecNet) {
    prediction_ = MakeNetwork(PredictionEncoderSpec(c.prediction_latent), params_,
                              "pred", NetworkInit::kRandom, rng);
  }
}

template <typename T>
void Coder<T>::CheckFrame(const Tensor<T>& frame, const char* what) const {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3 || s.h <= 0 || s.w <= 0 || s.h % kFrameAlignment != 0 ||
      s.w % kFrameAlignment != 0) {
    throw DimensionError(std::string(what) + " must be [1,3,H,W] with H, W "
                         "multiples of 16, got " + s.ToString());
  }
}

template <typename T>
void Coder<T>::CheckFrames(const Tensor<T>& x, const Tensor<T>& x_tilde) const {
  CheckFrame(x, "frame");
  CheckFrame(x_tilde, "prediction");
  if (x.shape() != x_tilde.shape()) {
    throw DimensionError("frame and prediction differ: " + x.shape().ToString() +
                         " vs " + x_tilde.shape().ToString());
  }
}

template <typename T>
Tensor<T> Coder<T>::GdApply(const Tensor<T>& x, const Tensor<T>& x_tilde) const {
  if (!gd_.spec().layers.size()) throw ContractError("coder has no GD network");
  if (x.shape() != x_tilde.shape() || x.shape().c != 3) {
    throw DimensionError("gd: inputs must be matching 3-channel frames");
  }
  return gd_.Forward(ConcatChannels(x, x_tilde));
}

template <typename T>
Tensor<T> Coder<T>::GsApply(const Tensor<T>& x_tilde, const Tensor<T>& g_hat) const {
  if (!gs_.spec().layers.size()) throw ContractError("coder has no GS network");
  const Shape& a = x_tilde.shape();
  const Shape& b = g_hat.shape();
  if (a.c != 3 || a.n != b.n || a.h != b.h || a.w != b.w ||
      b.c != config_.core_out_channels()) {
    throw DimensionError("gs: got " + a.ToString() + " and " + b.ToString());
  }
  return gs_.Forward(ConcatChannels(x_tilde, g_hat));
}

template <typename T>
Shape Coder<T>::LatentShape(int64_t height, int64_t width) const {
  return {1, config_.latent, OutputSize(encoder_.spec(), height),
          OutputSize(encoder_.spec(), width)};
}

template <typename T>
Shape Coder<T>::HyperShape(int64_t height, int64_t width) const {
  const Shape y = LatentShape(height, width);
  return {1, config_.hyper, OutputSize(hyper_encoder_.spec(), y.h),
          OutputSize(hyper_encoder_.spec(), y.w)};
}

template <typename T>
Tensor<T> Coder<T>::CoreInput(const Tensor<T>& x, const Tensor<T>& x_tilde) const {
  switch (config_.kind) {
    case CoderKind::kDiff:
      return Sub(x, x_tilde);
    case CoderKind::kCodecNet:
      return ConcatChannels(x, x_tilde);
    case CoderKind::kGdc:
      return GdApply(x, x_tilde);
    case CoderKind::kXgdc:
      return ConcatChannels(Sub(x, x_tilde), GdApply(x, x_tilde));
  }
  throw InternalError("unknown coder kind");
}

template <typename T>
typename Coder<T>::Prior Coder<T>::LatentPrior(const Tensor<T>& z_hat,
                                               const Shape& y_shape) const {
  Tensor<T> h = CropSpatial(hyper_decoder_.Forward(z_hat), y_shape.h, y_shape.w);
  const int64_t y = config_.latent;
  return {SliceChannels(h, 0, y), ScaleFromRaw(SliceChannels(h, y, 2 * y))};
}

template <typename T>
DecodedFrame<T> Coder<T>::Synthesize(const Tensor<T>& x_tilde,
                                     const Tensor<T>& y_hat) const {
  Tensor<T> dec_in = y_hat;
  if (config_.kind == CoderKind::kCodecNet) {
    dec_in = ConcatChannels(y_hat, prediction_.Forward(x_tilde));
  }
  Tensor<T> out = decoder_.Forward(dec_in);
  DecodedFrame<T> frame;
  switch (config_.kind) {
    case CoderKind::kDiff:
      frame.x_hat_d = Add(x_tilde, out);
      break;
    case CoderKind::kCodecNet:
      frame.x_hat_d = out;
      break;
    case CoderKind::kGdc:
      frame.x_hat_g = GsApply(x_tilde, out);
      break;
    case CoderKind::kXgdc:
      frame.x_hat_d = Add(x_tilde, SliceChannels(out, 0, 3));
      frame.x_hat_g = GsApply(x_tilde, out);
      break;
  }
  return frame;
}

template <typename T>
CoderOutput<T> Coder<T>::Forward(const Tensor<T>& x, const Tensor<T>& x_tilde,
                                 QuantMode mode, uint64_t seed) const {
  CheckFrames(x, x_tilde);
  Tensor<T> y = encoder_.Forward(CoreInput(x, x_tilde));
  CoderOutput<T> out;
  out.y_hat = Quantize(y, mode, MixSeed(seed, kNoiseStreamY));
  out.z_hat = Quantize(hyper_encoder_.Forward(y), mode, MixSeed(seed, kNoiseStreamZ));
  auto [z_mean, z_scale] = ContextParams(context_, out.z_hat);
  out.rate_z = Sum(GaussianBits(out.z_hat, z_mean, z_scale));
  Prior prior = LatentPrior(out.z_hat, y.shape());
  out.rate_y = Sum(GaussianBits(out.y_hat, prior.mean, prior.scale));
  DecodedFrame<T> rec = Synthesize(x_tilde, out.y_hat);
  out.x_hat_d = std::move(rec.x_hat_d);
  out.x_hat_g = std::move(rec.x_hat_g);
  return out;
}

template <typename T>
EncodedFrame<T> Coder<T>::Encode(const Tensor<T>& x, const Tensor<T>& x_tilde) const {
  CheckFrames(x, x_tilde);
  NoGradGuard no_grad;
  Tensor<T> y = encoder_.Forward(CoreInput(x, x_tilde));
  Tensor<T> y_hat = Quantize(y, QuantMode::kRound, 0);
  Tensor<T> z_hat = Quantize(hyper_encoder_.Forward(y), QuantMode::kRound, 0);
  EncodedFrame<T> enc;
  enc.z = EncodeHyperContext(z_hat, context_);
  Prior prior = LatentPrior(z_hat, y.shape());
  enc.y = EncodeGaussianTensor(y_hat, prior.mean, prior.scale);
  DecodedFrame<T> rec = Synthesize(x_tilde, y_hat);
  enc.x_hat_d = std::move(rec.x_hat_d);
  enc.x_hat_g = std::move(rec.x_hat_g);
  return enc;
}

template <typename T>
DecodedFrame<T> Coder<T>::Decode(const Tensor<T>& x_tilde,
                                 std::span<const uint8_t> z_bytes,
                                 std::span<const uint8_t> y_bytes) const {
  CheckFrame(x_tilde, "prediction");
  NoGradGuard no_grad;
  const Shape& s = x_tilde.shape();
  Tensor<T> z_hat = DecodeHyperContext(z_bytes, HyperShape(s.h, s.w), context_);
  const Shape y_shape = LatentShape(s.h, s.w);
  Prior prior = LatentPrior(z_hat, y_shape);
  Tensor<T> y_hat = DecodeGaussianTensor(y_bytes, prior.mean, prior.scale);
  return Synthesize(x_tilde, y_hat);
}

int64_t CountParameters(const CoderConfig& c) {
  c.Validate();
  int64_t total = CountParameters(CoreEncoder(c)) + CountParameters(CoreDecoder(c)) +
                  CountParameters(HyperEncoderSpec(c.latent, c.hidden, c.hyper)) +
                  CountParameters(HyperDecoderSpec(c.hyper, c.hidden, c.latent)) +
                  CountParameters(ContextSpec(c.hyper));
  if (c.kind == CoderKind::kGdc || c.kind == CoderKind::kXgdc) {
    total += CountParameters(GdSpec(c.g_channels())) +
             CountParameters(GsSpec(c.core_out_channels()));
  }
  if (c.kind == CoderKind::kCodecNet) {
    total += CountParameters(PredictionEncoderSpec(c.prediction_latent));
  }
  return total;
}

template <typename T>
CoderConfig InferConfig(const ParamStore<T>& params) {
  auto dim = [&](const std::string& name, int axis) -> int64_t {
    if (!params.Contains(name)) {
      throw FormatError("checkpoint lacks '" + name + "'");
    }
    const Shape& s = params.Get(name).shape();
    return axis == 0 ? s.n : s.c;
  };
  CoderConfig c;
  c.identity_init = false;
  c.hidden = dim("core.enc.0.weight", 0);
  c.latent = dim("core.enc.3.weight", 0);
  c.hyper = dim("prior.henc.2.weight", 0);
  if (params.Contains("pred.0.weight")) {
    c.kind = CoderKind::kCodecNet;
    c.prediction_latent = dim("pred.0.weight", 0);
  } else if (params.Contains("gd.2.weight")) {
    const int64_t g = dim("gd.2.weight", 0);
    if (g == 3) {
      c.kind = CoderKind::kGdc;
    } else if (g == kXgdcGChannels) {
      c.kind = CoderKind::kXgdc;
    } else {
      throw FormatError("unsupported GD width " + std::to_string(g));
    }
  } else {
    c.kind = CoderKind::kDiff;
  }
  c.Validate();
  if (dim("core.enc.0.weight", 1) != c.core_in_channels()) {
    throw FormatError("checkpoint encoder input does not match its coder kind");
  }
  return c;
}

template struct CoderOutput<float>;
template struct CoderOutput<double>;
template class Coder<float>;
template class Coder<double>;
template CoderConfig InferConfig(const ParamStore<float>&);
template CoderConfig InferConfig(const ParamStore<double>&);

}  // namespace gdc
