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

// Rate-distortion training: L = MSE_255(x, x^) + lambda * bpp, optimized with
// Adam on single (frame, prediction) pairs.

#ifndef GDC_TRAINING_H_
#define GDC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gdc/coders.h"
#include "gdc/layers.h"
#include "gdc/tensor.h"

namespace gdc {

inline constexpr double kLambdaMenu[] = {256, 512, 1024, 2048};
inline constexpr double kTargetThresholdDb = 30.0;

// Scalar RD loss. |rate_bits| is a scalar tensor; pixel_count = H * W.
template <typename T>
Tensor<T> RdLoss(const Tensor<T>& x, const Tensor<T>& x_hat, const Tensor<T>& rate_bits,
                 double lambda, int64_t pixel_count);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(ParamStore<T>& params, AdamConfig config = {});

  // Applies one update from the current gradients (missing ones count as
  // zero). Throws NumericError and leaves everything untouched if any
  // gradient is non-finite.
  void Step();
  int64_t step() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamStore<T>* params_;
  AdamConfig config_;
  int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

enum class TrainTarget : uint8_t { kD, kG };

// kD iff PSNR(x~, x) > threshold.
template <typename T>
TrainTarget SelectXgdcTarget(const Tensor<T>& x, const Tensor<T>& x_tilde,
                             double threshold = kTargetThresholdDb);

struct PairConfig {
  int64_t patch = 32;
  // Translation of the prediction: uniform in [-max_shift, max_shift] per
  // axis, or exactly (shift_x, shift_y) when max_shift is 0.
  double max_shift = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
  bool integer_shift = false;
  bool blur = false;
  // Uniform quantizer step on [0, 1]; 0 disables degradation.
  double degrade_step = 0.0;
};

template <typename T>
struct FramePair {
  Tensor<T> x;
  Tensor<T> x_tilde;
};

// x is a random patch of |image| ([1, 3, H, W]); x~ samples the image at the
// translated patch position (bilinear, edge clamped), then blurs and
// quantizes. Throws ContractError if the image is smaller than the patch.
template <typename T>
FramePair<T> MakePair(const Tensor<T>& image, const PairConfig& config, uint64_t seed);

// Uniform quantization of |frame| with |step|, clipped to [0, 1].
template <typename T>
Tensor<T> Degrade(const Tensor<T>& frame, double step);

// Bisects the quantizer step so that the mean PSNR of degraded versus clean
// predictions over the pairs drawn from |images| hits |target_db|.
template <typename T>
double CalibrateDegradeStep(std::span<const Tensor<T>> images, const PairConfig& config,
                            int64_t pairs, double target_db, uint64_t seed);

// Procedural RGB test image in [0, 1]: gradients, oriented waves, shapes and
// fine texture.
template <typename T>
Tensor<T> SyntheticImage(int64_t height, int64_t width, std::mt19937_64& rng);

// Pairs alternating between accurate predictions (sub-pixel misalignment)
// and poor ones (multi-pixel misalignment, some blurred), all degraded with
// |base.degrade_step|.
template <typename T>
std::vector<FramePair<T>> BuildPairCorpus(std::span<const Tensor<T>> images,
                                          int64_t count, const PairConfig& base,
                                          uint64_t seed);

struct TrainConfig {
  double lambda = 1024;
  bool allow_custom_lambda = false;
  double learning_rate = 1e-4;
  int64_t steps = 0;
  uint64_t seed = 0;
  double target_threshold = kTargetThresholdDb;

  void Validate() const;
};

struct TrainStats {
  int64_t steps = 0;
  double mean_loss = 0.0;
  double mean_bpp = 0.0;
  double mean_psnr = 0.0;
  double mode_d_fraction = 0.0;
  std::vector<double> losses;
  std::vector<double> bpps;
};

// Per-step progress callback (step index, loss, bpp).
using TrainLogger = std::function<void(int64_t, double, double)>;

// Runs config.steps optimizer steps cycling over |pairs| in order, each in
// noise mode with a step-derived seed.
template <typename T>
TrainStats TrainEpoch(Coder<T>& coder, Adam<T>& optimizer,
                      std::span<const FramePair<T>> pairs, const TrainConfig& config,
                      const TrainLogger& logger = {});

// Reconstruction that the loss trains for this pair.
template <typename T>
const Tensor<T>& TrainedReconstruction(const CoderOutput<T>& out, const FramePair<T>& pair,
                                       CoderKind kind, double threshold, bool* is_d);

struct EvalStats {
  double mean_loss = 0.0;
  double mean_bpp = 0.0;
  double mean_psnr = 0.0;
};

// Round-mode RD loss with estimated rates, averaged over |pairs|.
template <typename T>
EvalStats EvaluateRd(const Coder<T>& coder, std::span<const FramePair<T>> pairs,
                     double lambda, double threshold = kTargetThresholdDb);

}  // namespace gdc

#endif  // GDC_TRAINING_H_
