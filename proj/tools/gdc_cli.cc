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

// gdc: command-line front end.
//
//   gdc infolab  --out infolab.csv
//   gdc train    --config run.cfg
//   gdc encode   --checkpoint m.gdck --frame x.ppm --prediction p.ppm --out f.gdcb
//   gdc decode   --checkpoint m.gdck --prediction p.ppm --in f.gdcb --out xhat.ppm
//   gdc eval     --checkpoint a.gdck --lambda 1024 --csv curve.csv
//   gdc bdrate   anchor.csv test.csv
//   gdc quadtree --checkpoint m.gdck --frame x.ppm --prediction p.ppm
//   gdc selftest
//
// Exit status: 0 on success, 2 on a usage error, 1 on any other failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
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

namespace gdc {
namespace {

using Real = float;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr double kDegradeTargetDb = 35.0;
constexpr int64_t kSyntheticImages = 8;
constexpr int64_t kSyntheticSize = 96;

// Restores a coder from a checkpoint written by "train".
Coder<Real> LoadCoder(const std::string& path) {
  const ParamStore<Real> stored = LoadCheckpoint<Real>(path);
  const CoderConfig config = InferConfig(stored);
  Coder<Real> coder(config, 0);
  const int copied = coder.params().CopyMatching(stored);
  if (copied != static_cast<int>(coder.params().entries().size()) ||
      stored.entries().size() != coder.params().entries().size()) {
    throw FormatError("checkpoint does not match the inferred " + CoderName(config) +
                      " layout");
  }
  return coder;
}

std::vector<Tensor<Real>> LoadImages(const std::string& dataset, uint64_t seed) {
  std::vector<Tensor<Real>> images;
  if (dataset.empty()) {
    std::mt19937_64 rng(MixSeed(seed, 100));
    for (int64_t i = 0; i < kSyntheticImages; ++i) {
      images.push_back(SyntheticImage<Real>(kSyntheticSize, kSyntheticSize, rng));
    }
    return images;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dataset)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ContractError("no .ppm files in " + dataset);
  for (const auto& f : files) images.push_back(LoadImage<Real>(f.string()));
  return images;
}

std::vector<FramePair<Real>> MakeCorpus(const std::vector<Tensor<Real>>& images,
                                        PairConfig pairs, int64_t count, uint64_t seed,
                                        bool calibrate) {
  if (calibrate) {
    pairs.degrade_step = CalibrateDegradeStep<Real>(images, pairs, 64, kDegradeTargetDb,
                                                    MixSeed(seed, 101));
  }
  return BuildPairCorpus<Real>(images, count, pairs, MixSeed(seed, 102));
}

std::string Fixed(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// Command handlers --------------------------------------------------------

struct InfoLabArgs {
  int64_t cases = 100;
  int64_t maps = 20;
  int64_t max_alphabet = 8;
  uint64_t seed = 1;
  std::string out = "infolab.csv";
};

int RunInfoLab(const InfoLabArgs& a) {
  const std::vector<InfoLabRow> rows =
      RunInfoLabSweep(a.cases, a.maps, a.max_alphabet, a.seed);
  std::string csv = InfoLabCsvHeader() + "\n";
  int64_t failures = 0;
  for (const auto& row : rows) {
    csv += InfoLabCsvLine(row) + "\n";
    if (!row.pass) {
      ++failures;
      std::cerr << "case " << row.case_index << " map " << row.map_index << ": "
                << row.failure << "\n";
    }
  }
  WriteTextFile(a.out, csv);
  std::cout << rows.size() << " rows, " << failures << " failures -> " << a.out << "\n";
  return failures == 0 ? 0 : kExitFailure;
}

struct TrainArgs {
  std::string config;
  int64_t steps = -1;
  std::string checkpoint;
  std::string log;
};

int RunTrain(const TrainArgs& a) {
  const KeyValueConfig kv = KeyValueConfig::Load(a.config);
  ExperimentConfig cfg = ParseExperimentConfig(kv);
  if (a.steps >= 0) cfg.train.steps = a.steps;
  if (!a.checkpoint.empty()) cfg.checkpoint = a.checkpoint;
  if (!a.log.empty()) cfg.log = a.log;
  if (cfg.checkpoint.empty()) throw ContractError("no checkpoint path (key 'checkpoint')");

  const std::vector<Tensor<Real>> images = LoadImages(cfg.dataset, cfg.train.seed);
  const std::vector<FramePair<Real>> pairs =
      MakeCorpus(images, cfg.pairs, cfg.pair_count, cfg.train.seed,
                 !kv.Has("degrade_step"));

  Coder<Real> coder(cfg.coder, cfg.train.seed);
  Adam<Real> adam(coder.params(), AdamConfig{.learning_rate = cfg.train.learning_rate});
  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!cfg.log.empty()) {
    log_file.open(cfg.log);
    if (!log_file) throw StreamError("cannot open " + cfg.log);
    log = &log_file;
  }
  *log << "step,loss,bpp\n";
  const int64_t every = std::max<int64_t>(1, cfg.train.steps / 100);
  const TrainLogger logger = [&](int64_t step, double loss, double bpp) {
    if (step % every == 0 || step + 1 == cfg.train.steps) {
      *log << step << "," << Fixed(loss) << "," << Fixed(bpp) << "\n";
    }
  };
  const TrainStats stats =
      TrainEpoch<Real>(coder, adam, pairs, cfg.train, cfg.log.empty() ? TrainLogger{} : logger);
  SaveCheckpoint(coder.params(), cfg.checkpoint);
  std::cout << CoderName(cfg.coder) << ": " << stats.steps << " steps, mean loss "
            << Fixed(stats.mean_loss, 3) << ", mean bpp " << Fixed(stats.mean_bpp, 4)
            << ", d fraction " << Fixed(stats.mode_d_fraction, 3) << " -> "
            << cfg.checkpoint << "\n";
  return 0;
}

struct EncodeArgs {
  std::string checkpoint;
  std::string frame;
  std::string prediction;
  std::string out;
  double lambda = 1024;
  bool quadtree = false;
  int64_t min_block = 4;
  int64_t max_block = 64;
  std::string recon;
  std::string recon_raw;
};

void WriteRaw(const Tensor<Real>& t, const std::string& path) {
  ParamStore<Real> store;
  store.Add("x_hat", t);
  SaveCheckpoint(store, path);
}

int RunEncode(const EncodeArgs& a) {
  const Coder<Real> coder = LoadCoder(a.checkpoint);
  const Tensor<Real> x = LoadImage<Real>(a.frame);
  const Tensor<Real> x_tilde = LoadImage<Real>(a.prediction);
  FrameCodingOptions options;
  options.lambda = a.lambda;
  options.quadtree = a.quadtree;
  options.min_block = a.min_block;
  options.max_block = a.max_block;
  const EncodedFrameResult<Real> r = EncodeFrame(coder, x, x_tilde, options);
  WriteFileBytes(a.out, r.bytes);
  if (!a.recon.empty()) WriteImage(r.reconstruction, a.recon);
  if (!a.recon_raw.empty()) WriteRaw(r.reconstruction, a.recon_raw);
  std::cout << "bytes " << r.bytes.size() << " bpp " << Fixed(r.bpp, 4) << " psnr "
            << Fixed(r.psnr, 3) << " estimated_bits " << Fixed(r.estimated_payload_bits, 1)
            << " payload_bits " << r.payload_bits << " side_bits " << r.side_bits << "\n";
  return 0;
}

struct DecodeArgs {
  std::string checkpoint;
  std::string prediction;
  std::string in;
  std::string out;
  std::string raw;
};

int RunDecode(const DecodeArgs& a) {
  if (a.out.empty() && a.raw.empty()) throw ContractError("nothing to write");
  const Coder<Real> coder = LoadCoder(a.checkpoint);
  const Tensor<Real> x_tilde = LoadImage<Real>(a.prediction);
  const Bitstream stream = ReadBitstream(ReadFileBytes(a.in));
  const Tensor<Real> x_hat = DecodeFrame(coder, x_tilde, stream);
  if (!a.out.empty()) WriteImage(x_hat, a.out);
  if (!a.raw.empty()) WriteRaw(x_hat, a.raw);
  return 0;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::vector<double> lambdas;
  std::string dataset;
  int64_t pairs = 20;
  int64_t patch = 64;
  uint64_t seed = 7;
  bool quadtree = false;
  std::string csv = "eval.csv";
};

int RunEval(const EvalArgs& a) {
  if (a.checkpoints.size() != a.lambdas.size()) {
    throw ContractError("give one --lambda per --checkpoint");
  }
  PairConfig pc;
  pc.patch = a.patch;
  const std::vector<FramePair<Real>> pairs =
      MakeCorpus(LoadImages(a.dataset, a.seed), pc, a.pairs, a.seed, true);
  std::string csv = "model,lambda,frame,bpp,psnr,estimated_bpp,mode_d_fraction\n";
  for (size_t m = 0; m < a.checkpoints.size(); ++m) {
    const Coder<Real> coder = LoadCoder(a.checkpoints[m]);
    FrameCodingOptions options;
    options.lambda = a.lambdas[m];
    options.quadtree = a.quadtree && coder.config().kind == CoderKind::kXgdc;
    double bpp = 0, psnr = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const auto r = EncodeFrame(coder, pairs[i].x, pairs[i].x_tilde, options);
      const Shape& s = pairs[i].x.shape();
      csv += CoderName(coder.config()) + "," + Fixed(a.lambdas[m], 1) + "," +
             std::to_string(i) + "," + Fixed(r.bpp) + "," + Fixed(r.psnr) + "," +
             Fixed(Bpp(r.estimated_payload_bits, s.w, s.h)) + "," +
             Fixed(r.mode_d_fraction, 4) + "\n";
      bpp += r.bpp;
      psnr += r.psnr;
    }
    const double n = static_cast<double>(pairs.size());
    std::cout << a.checkpoints[m] << " lambda " << a.lambdas[m] << ": bpp "
              << Fixed(bpp / n, 4) << " psnr " << Fixed(psnr / n, 3) << "\n";
  }
  WriteTextFile(a.csv, csv);
  return 0;
}

struct BdRateArgs {
  std::string anchor;
  std::string test;
};

int RunBdRate(const BdRateArgs& a) {
  const double bd = BdRate(ReadCurveCsv(a.anchor), ReadCurveCsv(a.test));
  std::printf("%.1f%%\n", 100.0 * bd + 0.0);
  return 0;
}

struct QuadTreeArgs {
  std::string checkpoint;
  std::string frame;
  std::string prediction;
  double lambda = 1024;
  int64_t min_block = 4;
  int64_t max_block = 64;
  std::string csv = "quadtree.csv";
};

int RunQuadTree(const QuadTreeArgs& a) {
  const Coder<Real> coder = LoadCoder(a.checkpoint);
  if (coder.config().kind != CoderKind::kXgdc) {
    throw ContractError("quad-tree search needs an xgdc checkpoint");
  }
  const Tensor<Real> x = LoadImage<Real>(a.frame);
  const Tensor<Real> x_tilde = LoadImage<Real>(a.prediction);
  const Shape& s = x.shape();
  const EncodedFrame<Real> enc =
      coder.Encode(PadReflect(x, kFrameAlignment), PadReflect(x_tilde, kFrameAlignment));
  const Tensor<Real> d = CropFrame(*enc.x_hat_d, s.h, s.w);
  const Tensor<Real> g = CropFrame(*enc.x_hat_g, s.h, s.w);
  const QuadTreeResult<Real> r =
      QuadTreeSearch(x, d, g, a.lambda, a.min_block, a.max_block);
  std::string csv = "x,y,size,mode\n";
  for (const auto& node : r.tree.nodes) {
    if (node.split) continue;
    csv += std::to_string(node.x) + "," + std::to_string(node.y) + "," +
           std::to_string(node.size) + "," + (node.mode == BlockMode::kD ? "d" : "g") + "\n";
  }
  WriteTextFile(a.csv, csv);
  auto root = [&](BlockMode mode) {
    return QuadTreeCost(RootLeafTree(s.w, s.h, a.min_block, a.max_block, mode), x, d, g,
                        a.lambda);
  };
  std::cout << "cost " << Fixed(r.cost, 2) << " d-only " << Fixed(root(BlockMode::kD), 2)
            << " g-only " << Fixed(root(BlockMode::kG), 2) << " side_bits " << r.side_bits
            << " d_fraction " << Fixed(r.tree.ModeFraction(BlockMode::kD), 4) << "\n";
  return 0;
}

// Self test ----------------------------------------------------------------

bool Check(const std::string& name, const std::function<bool()>& body) {
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    std::cout << "  (" << e.what() << ")\n";
  }
  std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
  return ok;
}

int RunSelfTest() {
  bool all = true;
  all &= Check("information identities", [] {
    for (const auto& row : RunInfoLabSweep(20, 5, 8, 3)) {
      if (!row.pass) return false;
    }
    return true;
  });
  all &= Check("convolution gradient", [] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    auto random = [&](Shape s) {
      std::vector<double> v(s.numel());
      for (double& e : v) e = n(rng);
      return Tensor<double>(s, v, true);
    };
    const std::vector<Tensor<double>> in = {random({1, 2, 6, 6}), random({3, 2, 3, 3}),
                                            random({3, 1, 1, 1})};
    const double err = GradCheck<double>(
        [](std::span<const Tensor<double>> t) {
          return Mean(Square(Conv2d(t[0], t[1], t[2], 2)));
        },
        in, 1e-5);
    return err < 1e-6;
  });
  all &= Check("range coder round trip", [] {
    std::mt19937_64 rng(9);
    const Cdf cdf = {0, 30000, 50000, 65000, 65536};
    std::discrete_distribution<int32_t> pick({30000, 20000, 15000, 536});
    std::vector<int32_t> symbols(20000);
    for (auto& s : symbols) s = pick(rng);
    const std::vector<Cdf> cdfs(symbols.size(), cdf);
    const Payload p = EncodeRange(symbols, cdfs);
    return DecodeRange(p.bytes, cdfs) == symbols;
  });
  CoderConfig small;
  small.hidden = 8;
  small.latent = 8;
  small.hyper = 4;
  small.prediction_latent = 8;
  std::mt19937_64 rng(11);
  const Tensor<Real> image = SyntheticImage<Real>(48, 48, rng);
  PairConfig pc;
  pc.max_shift = 1.0;
  pc.degrade_step = 0.05;
  const FramePair<Real> pair = MakePair(image, pc, 3);
  all &= Check("identity-initialized gdc equals diff", [&] {
    CoderConfig d = small, g = small;
    g.kind = CoderKind::kGdc;
    const Coder<Real> diff(d, 4), gdc(g, 4);
    for (QuantMode mode : {QuantMode::kNoise, QuantMode::kRound}) {
      const auto a = diff.Forward(pair.x, pair.x_tilde, mode, 8);
      const auto b = gdc.Forward(pair.x, pair.x_tilde, mode, 8);
      const auto av = a.x_hat_d->values();
      const auto bv = b.x_hat_g->values();
      if (!std::equal(av.begin(), av.end(), bv.begin(), bv.end())) return false;
      if (a.total_bits() != b.total_bits()) return false;
    }
    return true;
  });
  all &= Check("codec round trip, all coders", [&] {
    for (CoderKind kind :
         {CoderKind::kDiff, CoderKind::kCodecNet, CoderKind::kGdc, CoderKind::kXgdc}) {
      CoderConfig c = small;
      c.kind = kind;
      const Coder<Real> coder(c, 6);
      FrameCodingOptions options;
      options.quadtree = kind == CoderKind::kXgdc;
      const auto enc = EncodeFrame(coder, pair.x, pair.x_tilde, options);
      const auto dec = DecodeFrame(coder, pair.x_tilde, ReadBitstream(enc.bytes));
      const auto a = dec.values();
      const auto b = enc.reconstruction.values();
      if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) return false;
    }
    return true;
  });
  all &= Check("quad-tree never worse than a single mode", [&] {
    const Tensor<Real> g = Degrade(pair.x, 0.1);
    const auto r = QuadTreeSearch(pair.x, pair.x_tilde, g, 256.0, 4, 16);
    const Shape& s = pair.x.shape();
    for (BlockMode m : {BlockMode::kD, BlockMode::kG}) {
      const QuadTree t = RootLeafTree(s.w, s.h, 4, 16, m);
      if (r.cost > QuadTreeCost(t, pair.x, pair.x_tilde, g, 256.0)) return false;
    }
    return true;
  });
  all &= Check("bd-rate of identical curves", [] {
    const RdCurve c = {{0.1, 30, 0}, {0.2, 33, 0}, {0.4, 36, 0}, {0.8, 39, 0}};
    return std::abs(BdRate(c, c)) < 1e-9;
  });
  all &= Check("container and checkpoint round trips", [&] {
    CoderConfig c = small;
    c.kind = CoderKind::kXgdc;
    const Coder<Real> coder(c, 2);
    const auto restored = DeserializeCheckpoint<Real>(SerializeCheckpoint(coder.params()));
    if (SerializeCheckpoint(restored) != SerializeCheckpoint(coder.params())) return false;
    FrameCodingOptions options;
    options.quadtree = true;
    const auto enc = EncodeFrame(coder, pair.x, pair.x_tilde, options);
    return ReadBitstream(enc.bytes) == enc.stream;
  });
  std::cout << (all ? "selftest passed" : "selftest FAILED") << "\n";
  return all ? 0 : kExitFailure;
}

int Main(int argc, char** argv) {
  CLI::App app{"Generalized difference coding toolkit"};
  app.require_subcommand(1);

  InfoLabArgs info;
  auto* c_info = app.add_subcommand("infolab", "Verify the residual coding identities");
  c_info->add_option("--cases", info.cases, "Random sources")->check(CLI::PositiveNumber);
  c_info->add_option("--maps", info.maps, "Random maps per source")
      ->check(CLI::NonNegativeNumber);
  c_info->add_option("--max-alphabet", info.max_alphabet, "Largest alphabet")
      ->check(CLI::Range(2, 16));
  c_info->add_option("--seed", info.seed);
  c_info->add_option("--out", info.out, "CSV output");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a coder from a config file");
  c_train->add_option("--config", train.config)->required()->check(CLI::ExistingFile);
  c_train->add_option("--steps", train.steps, "Override the step count");
  c_train->add_option("--checkpoint", train.checkpoint, "Override the output checkpoint");
  c_train->add_option("--log", train.log, "Override the progress CSV");

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Code a frame given its prediction");
  c_enc->add_option("--checkpoint", enc.checkpoint)->required()->check(CLI::ExistingFile);
  c_enc->add_option("--frame", enc.frame)->required()->check(CLI::ExistingFile);
  c_enc->add_option("--prediction", enc.prediction)->required()->check(CLI::ExistingFile);
  c_enc->add_option("--out", enc.out, "Bitstream output")->required();
  c_enc->add_option("--lambda", enc.lambda);
  c_enc->add_flag("--quadtree", enc.quadtree, "Per-block output switching (xgdc)");
  c_enc->add_option("--min-block", enc.min_block);
  c_enc->add_option("--max-block", enc.max_block);
  c_enc->add_option("--recon", enc.recon, "Encoder-side reconstruction (PPM)");
  c_enc->add_option("--recon-raw", enc.recon_raw, "Same, as an exact tensor file");

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Reconstruct a frame from a bitstream");
  c_dec->add_option("--checkpoint", dec.checkpoint)->required()->check(CLI::ExistingFile);
  c_dec->add_option("--prediction", dec.prediction)->required()->check(CLI::ExistingFile);
  c_dec->add_option("--in", dec.in, "Bitstream")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--out", dec.out, "Reconstruction (PPM)");
  c_dec->add_option("--raw", dec.raw, "Reconstruction as an exact tensor file");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Rate and quality on held-out pairs");
  c_eval->add_option("--checkpoint", eval.checkpoints)->required();
  c_eval->add_option("--lambda", eval.lambdas)->required();
  c_eval->add_option("--dataset", eval.dataset, "Directory of PPM images");
  c_eval->add_option("--pairs", eval.pairs)->check(CLI::PositiveNumber);
  c_eval->add_option("--patch", eval.patch)->check(CLI::PositiveNumber);
  c_eval->add_option("--seed", eval.seed);
  c_eval->add_flag("--quadtree", eval.quadtree);
  c_eval->add_option("--csv", eval.csv);

  BdRateArgs bd;
  auto* c_bd = app.add_subcommand("bdrate", "Bjontegaard delta rate of two curve CSVs");
  c_bd->add_option("anchor", bd.anchor)->required()->check(CLI::ExistingFile);
  c_bd->add_option("test", bd.test)->required()->check(CLI::ExistingFile);

  QuadTreeArgs qt;
  auto* c_qt = app.add_subcommand("quadtree", "Per-block d/g decision of an xgdc frame");
  c_qt->add_option("--checkpoint", qt.checkpoint)->required()->check(CLI::ExistingFile);
  c_qt->add_option("--frame", qt.frame)->required()->check(CLI::ExistingFile);
  c_qt->add_option("--prediction", qt.prediction)->required()->check(CLI::ExistingFile);
  c_qt->add_option("--lambda", qt.lambda);
  c_qt->add_option("--min-block", qt.min_block);
  c_qt->add_option("--max-block", qt.max_block);
  c_qt->add_option("--csv", qt.csv);

  auto* c_self = app.add_subcommand("selftest", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_info->parsed()) return RunInfoLab(info);
    if (c_train->parsed()) return RunTrain(train);
    if (c_enc->parsed()) return RunEncode(enc);
    if (c_dec->parsed()) return RunDecode(dec);
    if (c_eval->parsed()) return RunEval(eval);
    if (c_bd->parsed()) return RunBdRate(bd);
    if (c_qt->parsed()) return RunQuadTree(qt);
    if (c_self->parsed()) return RunSelfTest();
  } catch (const std::exception& e) {
    std::cerr << "gdc: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace gdc

int main(int argc, char** argv) { return gdc::Main(argc, argv); }
