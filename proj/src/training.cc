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

#include "gdc/training.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gdc/error.h"
#include "gdc/evaluation.h"
#include "gdc/ops.h"
#include "gdc/random.h"

namespace gdc {

namespace {

constexpr double kAccurateShift = 0.35;
constexpr double kPoorShift = 2.5;

template <typename T>
T SampleClamped(std::span<const T> plane, int64_t h, int64_t w, double r, double c) {
  r = std::clamp(r, 0.0, static_cast<double>(h - 1));
  c = std::clamp(c, 0.0, static_cast<double>(w - 1));
  const int64_t r0 = static_cast<int64_t>(std::floor(r));
  const int64_t c0 = static_cast<int64_t>(std::floor(c));
  const int64_t r1 = std::min(r0 + 1, h - 1);
  const int64_t c1 = std::min(c0 + 1, w - 1);
  const double fr = r - r0;
  const double fc = c - c0;
  const double top = plane[r0 * w + c0] * (1 - fc) + plane[r0 * w + c1] * fc;
  const double bottom = plane[r1 * w + c0] * (1 - fc) + plane[r1 * w + c1] * fc;
  return static_cast<T>(top * (1 - fr) + bottom * fr);
}

// Separable [1 2 1] / 4 blur with replicated edges.
template <typename T>
std::vector<T> Blur(std::span<const T> src, const Shape& s) {
  std::vector<T> tmp(src.size());
  std::vector<T> out(src.size());
  for (int64_t p = 0; p < s.n * s.c; ++p) {
    const T* in = src.data() + p * s.plane();
    T* t = tmp.data() + p * s.plane();
    T* o = out.data() + p * s.plane();
    for (int64_t r = 0; r < s.h; ++r) {
      for (int64_t c = 0; c < s.w; ++c) {
        const T l = in[r * s.w + std::max<int64_t>(c - 1, 0)];
        const T m = in[r * s.w + c];
        const T rr = in[r * s.w + std::min(c + 1, s.w - 1)];
        t[r * s.w + c] = (l + 2 * m + rr) / 4;
      }
    }
    for (int64_t r = 0; r < s.h; ++r) {
      for (int64_t c = 0; c < s.w; ++c) {
        const T u = t[std::max<int64_t>(r - 1, 0) * s.w + c];
        const T m = t[r * s.w + c];
        const T d = t[std::min(r + 1, s.h - 1) * s.w + c];
        o[r * s.w + c] = (u + 2 * m + d) / 4;
      }
    }
  }
  return out;
}

void CheckPatch(int64_t patch) {
  if (patch <= 0 || patch % kFrameAlignment != 0) {
    throw ContractError("patch size must be a positive multiple of 16");
  }
}

}  // namespace

template <typename T>
Tensor<T> RdLoss(const Tensor<T>& x, const Tensor<T>& x_hat, const Tensor<T>& rate_bits,
                 double lambda, int64_t pixel_count) {
  if (x.shape() != x_hat.shape()) {
    throw DimensionError("rd_loss: " + x.shape().ToString() + " vs " +
                         x_hat.shape().ToString());
  }
  if (rate_bits.numel() != 1) throw DimensionError("rd_loss: rate must be scalar");
  if (pixel_count <= 0) throw ContractError("rd_loss: pixel count must be positive");
  Tensor<T> mse = Scale(Mean(Square(Sub(x_hat, x))), 255.0 * 255.0);
  return Add(mse, Scale(rate_bits, lambda / static_cast<double>(pixel_count)));
}

template <typename T>
Adam<T>::Adam(ParamStore<T>& params, AdamConfig config)
    : params_(&params), config_(config) {
  for (const auto& [name, tensor] : params.entries()) {
    m_.emplace_back(tensor.numel(), 0.0);
    v_.emplace_back(tensor.numel(), 0.0);
  }
}

template <typename T>
void Adam<T>::Step() {
  auto& entries = params_->entries();
  if (entries.size() != m_.size()) {
    throw ContractError("optimizer state does not match the parameter store");
  }
  for (const auto& [name, tensor] : entries) {
    if (!tensor.has_grad()) continue;
    for (T g : tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in '" + name + "'");
    }
  }
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (size_t e = 0; e < entries.size(); ++e) {
    Tensor<T>& tensor = entries[e].second;
    auto values = tensor.mutable_values();
    const bool has = tensor.has_grad();
    std::span<const T> grad = has ? tensor.grad() : std::span<const T>();
    auto& m = m_[e];
    auto& v = v_[e];
    for (size_t i = 0; i < values.size(); ++i) {
      const double g = has ? static_cast<double>(grad[i]) : 0.0;
      m[i] = config_.beta1 * m[i] + (1 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1 - config_.beta2) * g * g;
      const double update =
          config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      values[i] = static_cast<T>(values[i] - update);
    }
  }
}

template <typename T>
TrainTarget SelectXgdcTarget(const Tensor<T>& x, const Tensor<T>& x_tilde,
                             double threshold) {
  return Psnr(x_tilde, x) > threshold ? TrainTarget::kD : TrainTarget::kG;
}

template <typename T>
FramePair<T> MakePair(const Tensor<T>& image, const PairConfig& config, uint64_t seed) {
  CheckPatch(config.patch);
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw DimensionError("make_pair: image must be [1,3,H,W]");
  if (s.h < config.patch || s.w < config.patch) {
    throw ContractError("make_pair: image " + s.ToString() + " smaller than patch");
  }
  if (config.max_shift < 0 || config.degrade_step < 0) {
    throw ContractError("make_pair: shift and degradation must be non-negative");
  }
  std::mt19937_64 rng(seed);
  const int64_t oy = std::uniform_int_distribution<int64_t>(0, s.h - config.patch)(rng);
  const int64_t ox = std::uniform_int_distribution<int64_t>(0, s.w - config.patch)(rng);
  double dx = config.shift_x;
  double dy = config.shift_y;
  if (config.max_shift > 0) {
    std::uniform_real_distribution<double> shift(-config.max_shift, config.max_shift);
    dx = shift(rng);
    dy = shift(rng);
  }
  if (config.integer_shift) {
    dx = std::round(dx);
    dy = std::round(dy);
  }
  const int64_t p = config.patch;
  const Shape ps{1, 3, p, p};
  std::vector<T> x(ps.numel());
  std::vector<T> xt(ps.numel());
  auto src = image.values();
  for (int64_t c = 0; c < 3; ++c) {
    std::span<const T> plane = src.subspan(c * s.plane(), s.plane());
    for (int64_t r = 0; r < p; ++r) {
      for (int64_t col = 0; col < p; ++col) {
        const int64_t i = (c * p + r) * p + col;
        x[i] = plane[(oy + r) * s.w + ox + col];
        xt[i] = SampleClamped(plane, s.h, s.w, static_cast<double>(oy + r) + dy,
                              static_cast<double>(ox + col) + dx);
      }
    }
  }
  if (config.blur) xt = Blur<T>(xt, ps);
  Tensor<T> pred(ps, std::move(xt));
  if (config.degrade_step > 0) pred = Degrade(pred, config.degrade_step);
  return {Tensor<T>(ps, std::move(x)), pred};
}

template <typename T>
Tensor<T> Degrade(const Tensor<T>& frame, double step) {
  if (!(step > 0)) throw ContractError("degrade: step must be positive");
  std::vector<T> out(frame.values().begin(), frame.values().end());
  for (T& v : out) {
    v = static_cast<T>(std::clamp(step * RoundHalfAway(v / step), 0.0, 1.0));
  }
  return Tensor<T>(frame.shape(), std::move(out));
}

template <typename T>
double CalibrateDegradeStep(std::span<const Tensor<T>> images, const PairConfig& config,
                            int64_t pairs, double target_db, uint64_t seed) {
  if (images.empty() || pairs <= 0) throw ContractError("calibration needs data");
  std::vector<Tensor<T>> clean;
  PairConfig undegraded = config;
  undegraded.degrade_step = 0.0;
  for (int64_t i = 0; i < pairs; ++i) {
    clean.push_back(
        MakePair(images[i % images.size()], undegraded, MixSeed(seed, i)).x_tilde);
  }
  auto mean_psnr = [&](double step) {
    double total = 0.0;
    for (const auto& t : clean) total += Psnr(Degrade(t, step), t);
    return total / static_cast<double>(clean.size());
  };
  // PSNR falls monotonically (on average) with the step.
  double lo = 1e-4;
  double hi = 0.5;
  for (int it = 0; it < 50; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mean_psnr(mid) > target_db) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::sqrt(lo * hi);
}

template <typename T>
Tensor<T> SyntheticImage(int64_t height, int64_t width, std::mt19937_64& rng) {
  if (height <= 0 || width <= 0) throw ContractError("synthetic image must be non-empty");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Shape s{1, 3, height, width};
  std::vector<double> img(s.numel());
  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.2 + 0.6 * u(rng);
    gx[c] = 0.4 * (u(rng) - 0.5);
    gy[c] = 0.4 * (u(rng) - 0.5);
  }
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t r = 0; r < height; ++r) {
      for (int64_t col = 0; col < width; ++col) {
        img[(c * height + r) * width + col] =
            base[c] + gx[c] * col / width + gy[c] * r / height;
      }
    }
  }
  const int waves = 1 + static_cast<int>(u(rng) * 3);
  for (int k = 0; k < waves; ++k) {
    const double angle = u(rng) * std::numbers::pi;
    const double period = 4.0 + 20.0 * u(rng);
    const double phase = 2 * std::numbers::pi * u(rng);
    double amp[3];
    for (double& a : amp) a = 0.12 * (u(rng) - 0.5);
    const double fx = std::cos(angle) * 2 * std::numbers::pi / period;
    const double fy = std::sin(angle) * 2 * std::numbers::pi / period;
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t r = 0; r < height; ++r) {
        for (int64_t col = 0; col < width; ++col) {
          img[(c * height + r) * width + col] += amp[c] * std::sin(fx * col + fy * r + phase);
        }
      }
    }
  }
  const int shapes = 2 + static_cast<int>(u(rng) * 5);
  for (int k = 0; k < shapes; ++k) {
    const double cy = u(rng) * height;
    const double cx = u(rng) * width;
    const double radius = 2.0 + u(rng) * 0.3 * std::min(height, width);
    const bool disc = u(rng) < 0.5;
    double color[3];
    for (double& v : color) v = u(rng);
    const double alpha = 0.4 + 0.5 * u(rng);
    for (int64_t r = 0; r < height; ++r) {
      for (int64_t col = 0; col < width; ++col) {
        const double dy = r - cy;
        const double dx = col - cx;
        const bool inside = disc ? dx * dx + dy * dy <= radius * radius
                                 : std::abs(dx) <= radius && std::abs(dy) <= 0.6 * radius;
        if (!inside) continue;
        for (int64_t c = 0; c < 3; ++c) {
          double& v = img[(c * height + r) * width + col];
          v = (1 - alpha) * v + alpha * color[c];
        }
      }
    }
  }
  std::normal_distribution<double> grain(0.0, 0.01 + 0.02 * u(rng));
  std::vector<T> out(img.size());
  for (size_t i = 0; i < img.size(); ++i) {
    out[i] = static_cast<T>(std::clamp(img[i] + grain(rng), 0.0, 1.0));
  }
  return Tensor<T>(s, std::move(out));
}

template <typename T>
std::vector<FramePair<T>> BuildPairCorpus(std::span<const Tensor<T>> images,
                                          int64_t count, const PairConfig& base,
                                          uint64_t seed) {
  if (images.empty()) throw ContractError("pair corpus needs images");
  std::vector<FramePair<T>> pairs;
  pairs.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    PairConfig cfg = base;
    if (i % 2 == 0) {
      cfg.max_shift = kAccurateShift;
      cfg.blur = false;
    } else {
      cfg.max_shift = kPoorShift;
      cfg.blur = i % 4 == 3;
    }
    pairs.push_back(MakePair(images[i % images.size()], cfg, MixSeed(seed, i)));
  }
  return pairs;
}

void TrainConfig::Validate() const {
  if (!(lambda > 0) || !std::isfinite(lambda)) {
    throw ContractError("lambda must be positive");
  }
  if (!allow_custom_lambda &&
      std::find(std::begin(kLambdaMenu), std::end(kLambdaMenu), lambda) ==
          std::end(kLambdaMenu)) {
    throw ContractError("lambda must be one of 256, 512, 1024, 2048");
  }
  if (!(learning_rate > 0)) throw ContractError("learning rate must be positive");
  if (steps < 0) throw ContractError("steps must be non-negative");
}

template <typename T>
const Tensor<T>& TrainedReconstruction(const CoderOutput<T>& out, const FramePair<T>& pair,
                                       CoderKind kind, double threshold, bool* is_d) {
  bool d = true;
  switch (kind) {
    case CoderKind::kDiff:
    case CoderKind::kCodecNet:
      d = true;
      break;
    case CoderKind::kGdc:
      d = false;
      break;
    case CoderKind::kXgdc:
      d = SelectXgdcTarget(pair.x, pair.x_tilde, threshold) == TrainTarget::kD;
      break;
  }
  if (is_d != nullptr) *is_d = d;
  return d ? *out.x_hat_d : *out.x_hat_g;
}

template <typename T>
TrainStats TrainEpoch(Coder<T>& coder, Adam<T>& optimizer,
                      std::span<const FramePair<T>> pairs, const TrainConfig& config,
                      const TrainLogger& logger) {
  config.Validate();
  TrainStats stats;
  if (config.steps == 0) return stats;
  if (pairs.empty()) throw ContractError("training needs at least one pair");
  int64_t d_steps = 0;
  double psnr_total = 0.0;
  for (int64_t step = 0; step < config.steps; ++step) {
    const FramePair<T>& pair = pairs[step % pairs.size()];
    const Shape& s = pair.x.shape();
    CoderOutput<T> out = coder.Forward(pair.x, pair.x_tilde, QuantMode::kNoise,
                                       MixSeed(config.seed, optimizer.step()));
    bool is_d = false;
    const Tensor<T>& x_hat =
        TrainedReconstruction(out, pair, coder.config().kind, config.target_threshold, &is_d);
    Tensor<T> loss = RdLoss(pair.x, x_hat, out.rate(), config.lambda, s.h * s.w);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step));
    }
    coder.params().ZeroGrad();
    Backward(loss);
    try {
      optimizer.Step();
    } catch (const NumericError& e) {
      throw TrainingError("step " + std::to_string(step) + ": " + e.what());
    }
    const double bpp = Bpp(out.total_bits(), s.w, s.h);
    stats.losses.push_back(value);
    stats.bpps.push_back(bpp);
    psnr_total += Psnr(x_hat, pair.x);
    d_steps += is_d ? 1 : 0;
    if (logger) logger(step, value, bpp);
  }
  coder.params().ZeroGrad();
  const double n = static_cast<double>(config.steps);
  stats.steps = config.steps;
  for (double l : stats.losses) stats.mean_loss += l / n;
  for (double b : stats.bpps) stats.mean_bpp += b / n;
  stats.mean_psnr = psnr_total / n;
  stats.mode_d_fraction = static_cast<double>(d_steps) / n;
  return stats;
}

template <typename T>
EvalStats EvaluateRd(const Coder<T>& coder, std::span<const FramePair<T>> pairs,
                     double lambda, double threshold) {
  if (pairs.empty()) throw ContractError("evaluation needs at least one pair");
  NoGradGuard no_grad;
  EvalStats stats;
  const double n = static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const Shape& s = pair.x.shape();
    CoderOutput<T> out = coder.Forward(pair.x, pair.x_tilde, QuantMode::kRound);
    const Tensor<T>& x_hat =
        TrainedReconstruction(out, pair, coder.config().kind, threshold, nullptr);
    stats.mean_loss +=
        static_cast<double>(RdLoss(pair.x, x_hat, out.rate(), lambda, s.h * s.w).item()) / n;
    stats.mean_bpp += Bpp(out.total_bits(), s.w, s.h) / n;
    stats.mean_psnr += Psnr(x_hat, pair.x) / n;
  }
  return stats;
}

#define GDC_INSTANTIATE(T)                                                         \
  template Tensor<T> RdLoss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                            double, int64_t);                                      \
  template class Adam<T>;                                                          \
  template TrainTarget SelectXgdcTarget(const Tensor<T>&, const Tensor<T>&,        \
                                        double);                                   \
  template FramePair<T> MakePair(const Tensor<T>&, const PairConfig&, uint64_t);   \
  template Tensor<T> Degrade(const Tensor<T>&, double);                            \
  template double CalibrateDegradeStep(std::span<const Tensor<T>>,                 \
                                       const PairConfig&, int64_t, double,         \
                                       uint64_t);                                  \
  template Tensor<T> SyntheticImage(int64_t, int64_t, std::mt19937_64&);           \
  template std::vector<FramePair<T>> BuildPairCorpus(std::span<const Tensor<T>>,   \
                                                     int64_t, const PairConfig&,   \
                                                     uint64_t);                    \
  template const Tensor<T>& TrainedReconstruction(const CoderOutput<T>&,           \
                                                  const FramePair<T>&, CoderKind,  \
                                                  double, bool*);                  \
  template TrainStats TrainEpoch(Coder<T>&, Adam<T>&,                              \
                                 std::span<const FramePair<T>>,                    \
                                 const TrainConfig&, const TrainLogger&);          \
  template EvalStats EvaluateRd(const Coder<T>&, std::span<const FramePair<T>>,    \
                                double, double);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
