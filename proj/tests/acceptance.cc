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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "gdc/codec.h"
#include "gdc/coders.h"
#include "gdc/entropy.h"
#include "gdc/error.h"
#include "gdc/evaluation.h"
#include "gdc/infolab.h"
#include "gdc/io.h"
#include "gdc/layers.h"
#include "gdc/ops.h"
#include "gdc/random.h"
#include "gdc/tensor.h"
#include "gdc/training.h"
#include "quadtree_oracle.h"
#include "test_util.h"

#ifndef GDC_CLI_PATH
#error "GDC_CLI_PATH must name the gdc executable"
#endif

namespace gdc {
namespace {

using TD = Tensor<double>;
using TF = Tensor<float>;
using Fn = std::function<TD(std::span<const TD>)>;
using testing::BitEqual;
using testing::RandomTensor;
using testing::UniformTensor;

constexpr CoderKind kAllKinds[] = {CoderKind::kDiff, CoderKind::kCodecNet, CoderKind::kGdc,
                                   CoderKind::kXgdc};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; the first few are kept for the report.
  void Require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 3) detail << " [" << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void CheckRuntime(Outcome& out, const Stopwatch& clock, double limit_seconds) {
  const double s = clock.Seconds();
  out.detail << " runtime " << Num(s, 3) << " s (limit " << limit_seconds << " s)";
  out.Require(s < limit_seconds, "over time budget");
}

// 1. Residual-coding identities over random sources and maps.
Outcome InfoTheory() {
  Outcome out;
  const Stopwatch clock;
  const auto rows = RunInfoLabSweep(100, 20, 8, 2026);
  int failed = 0;
  for (const auto& row : rows) {
    if (!row.pass) {
      ++failed;
      out.Require(false, "case " + std::to_string(row.case_index) + " map " +
                             std::to_string(row.map_index) + ": " + row.failure);
    }
  }
  out.Require(rows.size() == 100u * 22u, "unexpected row count");

  const std::vector<double> half = {0.5, 0.5};
  const IdentityReport r = VerifyMainIdentity(IndependentJoint(half, half));
  out.Require(r.h_r == 1.5 && r.h_x_given_xt == 1.0 && r.i_xt_r == 0.5,
              "worked example " + Num(r.h_r) + " = " + Num(r.h_x_given_xt) + " + " +
                  Num(r.i_xt_r));
  out.detail << " " << rows.size() << " rows, " << failed << " failed; H(R)=" << r.h_r
             << " H(X|X~)=" << r.h_x_given_xt << " I(X~;R)=" << r.i_xt_r << ";";
  CheckRuntime(out, clock, 10);
  return out;
}

// 2. Central differences against reverse mode, 64-bit.
Outcome Gradients() {
  Outcome out;
  const Stopwatch clock;
  const std::vector<std::pair<std::string, Fn>> layers = {
      {"conv2d", [](std::span<const TD> t) { return Mean(Square(Conv2d(t[0], t[1], t[2], 2))); }},
      {"tconv2d",
       [](std::span<const TD> t) { return Mean(Square(TConv2d(t[0], t[3], t[4], 2))); }},
      {"gdn",
       [](std::span<const TD> t) {
         return Mean(Square(Gdn(t[0], AddScalar(Square(t[5]), 0.5), Square(t[6]), false)));
       }},
      {"igdn",
       [](std::span<const TD> t) {
         return Mean(Square(Gdn(t[0], AddScalar(Square(t[5]), 0.5), Square(t[6]), true)));
       }},
      {"prelu", [](std::span<const TD> t) { return Mean(Square(Prelu(t[0], t[7]))); }},
      {"masked conv",
       [](std::span<const TD> t) {
         return Mean(Square(MaskedConv2d(t[0], t[8], t[2], MaskKind::kB)));
       }},
      {"gaussian rate",
       [](std::span<const TD> t) {
         return Sum(GaussianBits(t[0], t[9], AddScalar(Square(t[10]), 0.5)));
       }},
  };
  double worst_layer = 0.0;
  for (const auto& [name, f] : layers) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(MixSeed(7, seed));
      const std::vector<TD> in = {
          RandomTensor<double>({1, 3, 5, 6}, rng, true),
          RandomTensor<double>({2, 3, 3, 3}, rng, true),
          RandomTensor<double>({2, 1, 1, 1}, rng, true),
          RandomTensor<double>({3, 2, 3, 3}, rng, true),
          RandomTensor<double>({2, 1, 1, 1}, rng, true),
          RandomTensor<double>({3, 1, 1, 1}, rng, true),
          RandomTensor<double>({3, 3, 1, 1}, rng, true),
          RandomTensor<double>({3, 1, 1, 1}, rng, true),
          RandomTensor<double>({2, 3, 5, 5}, rng, true),
          RandomTensor<double>({1, 3, 5, 6}, rng, true, 0.5),
          RandomTensor<double>({1, 3, 5, 6}, rng, true)};
      const double e = GradCheck<double>(f, in, 1e-5);
      worst_layer = std::max(worst_layer, e);
      const double tol = name == "gaussian rate" ? 1e-5 : 1e-6;
      out.Require(e < tol, name + " seed " + std::to_string(seed) + " error " + Num(e));
    }
  }
  // GD and GS as standalone networks, randomly initialized.
  for (uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(MixSeed(8, seed));
    ParamStore<double> params;
    const Network<double> gd =
        MakeNetwork(GdSpec(4), params, "gd", NetworkInit::kRandom, rng);
    const Network<double> gs = MakeNetwork(GsSpec(4), params, "gs", NetworkInit::kRandom, rng);
    const std::vector<TD> in = {UniformTensor<double>({1, 3, 8, 8}, rng, 0, 1, true),
                                UniformTensor<double>({1, 3, 8, 8}, rng, 0, 1, true)};
    const Fn f = [&](std::span<const TD> t) {
      return Mean(Square(gs.Forward(ConcatChannels(t[1], gd.Forward(ConcatChannels(t[0], t[1]))))));
    };
    const double e = GradCheck<double>(f, in, 1e-5);
    worst_layer = std::max(worst_layer, e);
    out.Require(e < 1e-4, "gd/gs seed " + std::to_string(seed) + " error " + Num(e));
  }
  double worst_graph = 0.0;
  for (CoderKind kind : kAllKinds) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      CoderConfig c;
      c.kind = kind;
      c.hidden = 4;
      c.latent = 4;
      c.hyper = 2;
      c.prediction_latent = 4;
      c.identity_init = false;
      const Coder<double> coder(c, MixSeed(9, seed));
      std::mt19937_64 rng(MixSeed(10, seed));
      const std::vector<TD> in = {UniformTensor<double>({1, 3, 16, 16}, rng, 0, 1, true),
                                  UniformTensor<double>({1, 3, 16, 16}, rng, 0, 1, true)};
      const Fn f = [&](std::span<const TD> t) {
        const auto o = coder.Forward(t[0], t[1], QuantMode::kNoise, seed);
        const TD& rec = o.x_hat_d ? *o.x_hat_d : *o.x_hat_g;
        return RdLoss(t[0], rec, o.rate(), 1024.0, 256);
      };
      const double e = GradCheck<double>(f, in, 1e-5);
      worst_graph = std::max(worst_graph, e);
      out.Require(e < 1e-4, CoderName(c) + " seed " + std::to_string(seed) + " error " + Num(e));
    }
  }
  out.detail << " worst layer error " << Num(worst_layer) << ", worst coder graph error "
             << Num(worst_graph) << ";";
  CheckRuntime(out, clock, 120);
  return out;
}

// 3. Identity-initialized GDC against DiffCoder.
Outcome Equivalence() {
  Outcome out;
  const Stopwatch clock;
  for (uint64_t pair = 0; pair < 20; ++pair) {
    CoderConfig diff_cfg;
    diff_cfg.hidden = 16;
    diff_cfg.latent = 16;
    diff_cfg.hyper = 8;
    CoderConfig gdc_cfg = diff_cfg;
    gdc_cfg.kind = CoderKind::kGdc;
    const Coder<float> diff(diff_cfg, MixSeed(11, pair));
    const Coder<float> gdc(gdc_cfg, MixSeed(11, pair));
    std::mt19937_64 rng(MixSeed(12, pair));
    const TF x = UniformTensor<float>({1, 3, 32, 32}, rng);
    const TF xt = UniformTensor<float>({1, 3, 32, 32}, rng);
    for (QuantMode mode : {QuantMode::kNoise, QuantMode::kRound}) {
      const auto a = diff.Forward(x, xt, mode, pair);
      const auto b = gdc.Forward(x, xt, mode, pair);
      const std::string tag = "pair " + std::to_string(pair) +
                              (mode == QuantMode::kNoise ? " noise" : " round");
      out.Require(BitEqual(*a.x_hat_d, *b.x_hat_g), tag + " reconstruction");
      out.Require(a.rate_y.item() == b.rate_y.item(), tag + " y rate");
      out.Require(a.rate_z.item() == b.rate_z.item(), tag + " z rate");
    }
  }
  out.detail << " 20 pairs x 2 modes compared bitwise;";
  CheckRuntime(out, clock, 60);
  return out;
}

// 4. Parameter counts.
Outcome Ledger() {
  Outcome out;
  CoderConfig gdc;
  gdc.kind = CoderKind::kGdc;
  CoderConfig diff;
  const int64_t extra = CountParameters(gdc) - CountParameters(diff);
  out.Require(extra == 20140, "GD+GS count " + std::to_string(extra));

  auto overheads = [](int64_t n, int64_t y, int64_t z) {
    CoderConfig base;
    base.hidden = n;
    base.latent = y;
    base.hyper = z;
    CoderConfig xgdc = base, codecnet = base;
    xgdc.kind = CoderKind::kXgdc;
    codecnet.kind = CoderKind::kCodecNet;
    codecnet.prediction_latent = 192;
    const double b = static_cast<double>(CountParameters(base));
    return std::pair<double, double>{100.0 * (CountParameters(xgdc) / b - 1.0),
                                     100.0 * (CountParameters(codecnet) / b - 1.0)};
  };
  const CoderConfig defaults;
  const auto [x_def, c_def] = overheads(defaults.hidden, defaults.latent, defaults.hyper);
  // Core dims for which the overhead ratios are checked.
  const auto [x_led, c_led] = overheads(32, 224, 64);
  out.Require(std::abs(x_led - 6.7) <= 0.5, "xgdc overhead " + Num(x_led) + "%");
  out.Require(std::abs(c_led - 358.0) <= 35.8, "codecnet-192 overhead " + Num(c_led) + "%");
  out.detail << " GD+GS " << extra << "; at N=32 Y=224 Z=64: xgdc +" << Num(x_led)
             << "%, codecnet-192 +" << Num(c_led) << "%; at default dims N="
             << defaults.hidden << " Y=" << defaults.latent << " Z=" << defaults.hyper
             << ": xgdc +" << Num(x_def) << "%, codecnet-192 +" << Num(c_def) << "%;";
  return out;
}

// 5. Serialized streams decoded by a separate process.
Outcome CodecRoundTrip() {
  Outcome out;
  const Stopwatch clock;
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("gdc_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  int frames = 0;
  double worst_overshoot = -1e300;
  for (CoderKind kind : kAllKinds) {
    CoderConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 32;
    cfg.latent = 32;
    cfg.hyper = 16;
    cfg.identity_init = false;
    const Coder<float> coder(cfg, MixSeed(13, static_cast<uint64_t>(kind)));
    const std::string ckpt = (dir / (CoderName(cfg) + ".gdck")).string();
    SaveCheckpoint(coder.params(), ckpt);
    std::mt19937_64 rng(MixSeed(14, static_cast<uint64_t>(kind)));
    for (int i = 0; i < 10; ++i) {
      const std::string stem = (dir / (CoderName(cfg) + "_" + std::to_string(i))).string();
      PairConfig pc;
      pc.patch = 64;
      pc.max_shift = i % 2 == 0 ? 0.35 : 2.5;
      const FramePair<float> pair = MakePair(SyntheticImage<float>(96, 96, rng), pc,
                                             MixSeed(15, static_cast<uint64_t>(i)));
      // Both sides see the 8-bit prediction stored on disk.
      WriteImage(pair.x_tilde, stem + "_pred.ppm");
      const TF xt = LoadImage<float>(stem + "_pred.ppm");
      FrameCodingOptions opt;
      opt.lambda = kLambdaMenu[i % 4];
      opt.quadtree = kind == CoderKind::kXgdc && i % 2 == 1;
      opt.max_block = 16;
      const EncodedFrameResult<float> enc = EncodeFrame(coder, pair.x, xt, opt);
      WriteFileBytes(stem + ".gdcb", enc.bytes);
      const std::string cmd = std::string(GDC_CLI_PATH) + " decode --checkpoint " + ckpt +
                              " --prediction " + stem + "_pred.ppm --in " + stem +
                              ".gdcb --raw " + stem + "_raw.gdck > /dev/null 2>&1";
      const std::string tag = CoderName(cfg) + " frame " + std::to_string(i);
      if (std::system(cmd.c_str()) != 0) {
        out.Require(false, tag + ": decoder process failed");
        continue;
      }
      const ParamStore<float> raw = LoadCheckpoint<float>(stem + "_raw.gdck");
      out.Require(raw.entries().size() == 1 && BitEqual(raw.entries()[0].second,
                                                        enc.reconstruction),
                  tag + ": reconstruction differs");
      const double bound = 1.01 * enc.estimated_payload_bits + 64;
      worst_overshoot = std::max(worst_overshoot,
                                 static_cast<double>(enc.payload_bits) - bound);
      out.Require(static_cast<double>(enc.payload_bits) <= bound,
                  tag + ": " + std::to_string(enc.payload_bits) + " bits > " + Num(bound));
      ++frames;
    }
  }
  std::filesystem::remove_all(dir);
  out.detail << " " << frames << " frames decoded in a fresh process; max(actual - bound) = "
             << Num(worst_overshoot) << " bits;";
  CheckRuntime(out, clock, 120);
  return out;
}

// 6. Quad-tree search against exhaustive enumeration.
Outcome QuadTreeOptimality() {
  Outcome out;
  const Stopwatch clock;
  int compared = 0;
  for (uint64_t seed = 0; seed < 56; ++seed) {
    const testing::QuadTreeInstance in = testing::RandomQuadTreeInstance(seed);
    const double brute = testing::BruteForceQuadTreeCost(in, 4, 16);
    const QuadTreeResult<double> got = QuadTreeSearch(in.x, in.d, in.g, in.lambda, 4, 16);
    out.Require(std::abs(got.cost - brute) <= 1e-9 * std::max(1.0, brute),
                "seed " + std::to_string(seed) + ": " + Num(got.cost, 12) + " vs " +
                    Num(brute, 12));
    ++compared;
  }
  int bounded = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(MixSeed(16, seed));
    const int64_t h = 1 + static_cast<int64_t>(rng() % 70);
    const int64_t w = 1 + static_cast<int64_t>(rng() % 70);
    const TD x = UniformTensor<double>({1, 3, h, w}, rng);
    const TD d = Add(x, UniformTensor<double>({1, 3, h, w}, rng, -0.05, 0.05));
    const TD g = Add(x, UniformTensor<double>({1, 3, h, w}, rng, -0.05, 0.05));
    const double lambda = std::ldexp(1.0, static_cast<int>(rng() % 14));
    const int64_t max_block = int64_t{4} << (rng() % 4);
    const auto got = QuadTreeSearch(x, d, g, lambda, 4, max_block);
    for (BlockMode mode : {BlockMode::kD, BlockMode::kG}) {
      const double root =
          QuadTreeCost(RootLeafTree(w, h, 4, max_block, mode), x, d, g, lambda);
      out.Require(got.cost <= root, "root-leaf bound, seed " + std::to_string(seed));
    }
    ++bounded;
  }
  out.detail << " " << compared << " 16x16 instances match enumeration; " << bounded
             << " frames within both root-leaf costs;";
  CheckRuntime(out, clock, 60);
  return out;
}

RdCurve Curve(const std::vector<double>& bpp, const std::vector<double>& psnr) {
  RdCurve c;
  for (size_t i = 0; i < bpp.size(); ++i) c.push_back({bpp[i], psnr[i], 0});
  return c;
}

// 7. Bjontegaard delta rate.
Outcome BdRateChecks() {
  Outcome out;
  const RdCurve a = Curve({0.12, 0.25, 0.47, 0.9}, {29.5, 32.4, 35.1, 37.8});
  const double same = BdRate(a, a);
  out.Require(std::abs(same) < 1e-9, "identical curves gave " + Num(same));
  RdCurve half = a;
  for (auto& p : half) p.bpp *= 0.5;
  const double h = BdRate(a, half);
  out.Require(std::abs(h + 50.0) < 1e-6, "half rate gave " + Num(h, 12));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> step(0.3, 1.0), gain(1.0, 3.0), shift(-0.5, 0.5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    RdCurve p, q;
    double bp = 0.05, bq = 0.05 * std::exp(shift(rng)), qp = 28, qq = 28 + shift(rng);
    for (int i = 0; i < 4; ++i) {
      bp *= 1 + step(rng);
      bq *= 1 + step(rng);
      qp += gain(rng);
      qq += gain(rng);
      p.push_back({bp, qp, 0});
      q.push_back({bq, qq, 0});
    }
    // Swapping anchor and test inverts the average rate ratio.
    const double pq = BdRate(p, q) / 100, qp_ = BdRate(q, p) / 100;
    const double e = std::abs((1 + pq) * (1 + qp_) - 1);
    worst = std::max(worst, e);
    out.Require(e < 1e-9, "antisymmetry pair " + std::to_string(k));
  }
  out.detail << " identical " << Num(same) << "; half rate " << Num(h, 10)
             << "%; 100 swapped pairs, worst |(1+ab)(1+ba)-1| = " << Num(worst) << ";";
  return out;
}

// 8. Desk-scale training moves every coder downhill.
Outcome Training() {
  Outcome out;
  const Stopwatch clock;
  constexpr uint64_t kSeed = 18;
  std::mt19937_64 rng(MixSeed(kSeed, 1));
  std::vector<TF> images;
  for (int i = 0; i < 8; ++i) images.push_back(SyntheticImage<float>(96, 96, rng));
  PairConfig pc;
  pc.patch = 32;
  pc.degrade_step = CalibrateDegradeStep<float>(images, pc, 64, 35.0, MixSeed(kSeed, 2));
  const std::vector<FramePair<float>> corpus =
      BuildPairCorpus<float>(images, 200, pc, MixSeed(kSeed, 3));
  const std::span<const FramePair<float>> train(corpus.data(), 160);
  const std::span<const FramePair<float>> held(corpus.data() + 160, 40);
  int above = 0;
  for (const auto& p : corpus) above += Psnr(p.x_tilde, p.x) > 30.0 ? 1 : 0;
  out.detail << " corpus " << above << "/200 predictions above 30 dB;";
  out.Require(above > 0 && above < 200, "corpus does not straddle 30 dB");

  constexpr double kLambda = 1024;
  for (CoderKind kind : {CoderKind::kDiff, CoderKind::kGdc, CoderKind::kXgdc}) {
    CoderConfig cfg;
    cfg.kind = kind;
    cfg.hidden = 16;
    cfg.latent = 16;
    cfg.hyper = 8;
    Coder<float> coder(cfg, MixSeed(kSeed, 4));
    Adam<float> adam(coder.params(), AdamConfig{.learning_rate = 1e-4});
    TrainConfig tc;
    tc.lambda = kLambda;
    tc.learning_rate = 1e-4;
    tc.steps = 4000;
    tc.seed = MixSeed(kSeed, 5);
    const double before = EvaluateRd(coder, held, kLambda).mean_loss;
    const TrainStats stats = TrainEpoch<float>(coder, adam, train, tc);
    const double after = EvaluateRd(coder, held, kLambda).mean_loss;
    const std::string name = CoderName(cfg);
    out.Require(after < before, name + " held-out loss " + Num(before) + " -> " + Num(after));
    out.detail << " " << name << " held-out RD loss " << Num(before) << " -> " << Num(after)
               << ";";
    if (kind != CoderKind::kXgdc) continue;

    out.Require(stats.mode_d_fraction > 0 && stats.mode_d_fraction < 1,
                "xgdc mode-d fraction " + Num(stats.mode_d_fraction));
    out.detail << " xgdc train-d fraction " << Num(stats.mode_d_fraction) << ";";
    int hybrid_ok = 0;
    for (size_t i = 0; i < held.size(); ++i) {
      const auto o = coder.Forward(held[i].x, held[i].x_tilde, QuantMode::kRound);
      const auto qt = QuadTreeSearch(held[i].x, *o.x_hat_d, *o.x_hat_g, kLambda, 4, 32);
      const double d_only = QuadTreeCost(RootLeafTree(32, 32, 4, 32, BlockMode::kD),
                                         held[i].x, *o.x_hat_d, *o.x_hat_g, kLambda);
      out.Require(qt.cost <= d_only, "held-out frame " + std::to_string(i) +
                                         " hybrid cost above d-only");
      hybrid_ok += qt.cost <= d_only ? 1 : 0;
    }
    out.detail << " hybrid <= d-only on " << hybrid_ok << "/" << held.size() << " frames;";
  }
  CheckRuntime(out, clock, 1800);
  return out;
}

// 9. Training-target rule around the 30 dB threshold.
Outcome ModeRule() {
  Outcome out;
  const Stopwatch clock;
  const Shape s{1, 3, 10, 100};
  const TD x = TD::Full(s, 0.5);
  for (double db : {25.0, 29.9, 30.0, 30.1, 35.0}) {
    TD xt;
    if (db == 30.0) {
      // Three unit errors among 3000 samples: MSE is exactly fl(1e-3).
      xt = x.Clone(false);
      for (int i : {0, 1000, 2000}) xt.mutable_values()[i] += 1.0;
    } else {
      xt = AddScalar(x, std::sqrt(std::pow(10.0, -db / 10.0)));
    }
    const double psnr = Psnr(xt, x);
    const TrainTarget got = SelectXgdcTarget(x, xt);
    const TrainTarget want = psnr > 30.0 ? TrainTarget::kD : TrainTarget::kG;
    out.Require(got == want, Num(db) + " dB routed wrongly");
    out.Require((db > 30.0) == (psnr > 30.0), "constructed " + Num(db) + " dB pair measures " +
                                                   Num(psnr, 17));
    out.detail << " " << Num(db) << " dB -> " << (got == TrainTarget::kD ? "d" : "g") << ";";
  }
  CheckRuntime(out, clock, 5);
  return out;
}

}  // namespace
}  // namespace gdc

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-9); default all")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<gdc::Outcome()>>> criteria = {
      {"information identities", gdc::InfoTheory},
      {"gradients", gdc::Gradients},
      {"gdc/diff equivalence", gdc::Equivalence},
      {"parameter ledger", gdc::Ledger},
      {"codec round trip", gdc::CodecRoundTrip},
      {"quad-tree optimality", gdc::QuadTreeOptimality},
      {"bd-rate", gdc::BdRateChecks},
      {"training direction", gdc::Training},
      {"mode rule", gdc::ModeRule},
  };
  bool all_pass = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only != 0 && only != number) continue;
    bool pass = false;
    std::string detail;
    try {
      const gdc::Outcome o = criteria[i].second();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string(" exception: ") + e.what();
    }
    std::printf("%s criterion %d (%s):%s\n", pass ? "PASS" : "FAIL", number,
                criteria[i].first, detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && pass;
  }
  return all_pass ? 0 : 1;
}
