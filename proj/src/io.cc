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

#include "gdc/io.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gdc/error.h"
#include "gdc/ops.h"

namespace gdc {

namespace {

constexpr char kBitstreamMagic[4] = {'G', 'D', 'C', 'B'};
constexpr char kCheckpointMagic[4] = {'G', 'D', 'C', 'K'};
constexpr uint8_t kFlagQuadTree = 1;
constexpr uint8_t kFlagFrameModeG = 2;

class ByteWriter {
 public:
  void Bytes(std::span<const uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void Magic(const char (&m)[4]) {
    for (char c : m) out_.push_back(static_cast<uint8_t>(c));
  }
  template <typename U>
  void Int(U v) {
    for (size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<uint8_t>(static_cast<uint64_t>(v) >> (8 * i)));
    }
  }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  std::span<const uint8_t> Bytes(size_t n, const char* what) {
    if (n > bytes_.size() - pos_) {
      throw StreamError(std::string("truncated input reading ") + what);
    }
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool Magic(const char (&m)[4]) {
    auto b = Bytes(4, "magic");
    return std::equal(b.begin(), b.end(), m,
                      [](uint8_t a, char c) { return a == static_cast<uint8_t>(c); });
  }
  template <typename U>
  U Int(const char* what) {
    auto b = Bytes(sizeof(U), what);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return static_cast<U>(v);
  }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

int Log2(int64_t v) {
  int k = 0;
  while ((int64_t{1} << k) < v) ++k;
  return k;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double ParseNumber(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "' for " + what);
  }
}

}  // namespace

std::vector<uint8_t> WriteBitstream(const Bitstream& s) {
  if (s.z.size() > UINT32_MAX || s.y.size() > UINT32_MAX) {
    throw ContractError("payload too large for the container");
  }
  ByteWriter w;
  w.Magic(kBitstreamMagic);
  w.Int<uint32_t>(kBitstreamVersion);
  w.Int<uint8_t>(static_cast<uint8_t>(s.kind));
  w.Int<uint8_t>(s.lambda_index);
  w.Int<uint16_t>(s.width);
  w.Int<uint16_t>(s.height);
  uint8_t flags = 0;
  if (s.quadtree) flags |= kFlagQuadTree;
  if (s.frame_mode_g) flags |= kFlagFrameModeG;
  w.Int<uint8_t>(flags);
  w.Int<uint32_t>(static_cast<uint32_t>(s.z.size()));
  w.Bytes(s.z);
  w.Int<uint32_t>(static_cast<uint32_t>(s.y.size()));
  w.Bytes(s.y);
  if (s.quadtree) {
    const auto& q = *s.quadtree;
    ValidateBlockRange(q.min_block, q.max_block);
    if (q.bits.size() > UINT16_MAX) {
      throw ContractError("quad-tree side info exceeds 65535 bits");
    }
    w.Int<uint8_t>(static_cast<uint8_t>(Log2(q.min_block) << 4 | Log2(q.max_block)));
    w.Int<uint16_t>(static_cast<uint16_t>(q.bits.size()));
    w.Bytes(PackBits(q.bits));
  }
  return w.Take();
}

Bitstream ReadBitstream(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.Magic(kBitstreamMagic)) throw FormatError("not a GDCB bitstream");
  const uint32_t version = r.Int<uint32_t>("version");
  if (version != kBitstreamVersion) {
    throw FormatError("unsupported bitstream version " + std::to_string(version));
  }
  Bitstream s;
  const uint8_t kind = r.Int<uint8_t>("coder kind");
  if (kind > static_cast<uint8_t>(CoderKind::kXgdc)) {
    throw FormatError("unknown coder kind " + std::to_string(kind));
  }
  s.kind = static_cast<CoderKind>(kind);
  s.lambda_index = r.Int<uint8_t>("lambda index");
  s.width = r.Int<uint16_t>("width");
  s.height = r.Int<uint16_t>("height");
  if (s.width == 0 || s.height == 0) throw FormatError("empty frame size");
  const uint8_t flags = r.Int<uint8_t>("flags");
  if (flags & ~(kFlagQuadTree | kFlagFrameModeG)) throw FormatError("unknown flags");
  s.frame_mode_g = flags & kFlagFrameModeG;
  const uint32_t z_len = r.Int<uint32_t>("z length");
  auto z = r.Bytes(z_len, "z payload");
  s.z.assign(z.begin(), z.end());
  const uint32_t y_len = r.Int<uint32_t>("y length");
  auto y = r.Bytes(y_len, "y payload");
  s.y.assign(y.begin(), y.end());
  if (flags & kFlagQuadTree) {
    const uint8_t blocks = r.Int<uint8_t>("block sizes");
    QuadTreeSideInfo q;
    q.min_block = int64_t{1} << (blocks >> 4);
    q.max_block = int64_t{1} << (blocks & 15);
    try {
      ValidateBlockRange(q.min_block, q.max_block);
    } catch (const ContractError& e) {
      throw FormatError(e.what());
    }
    const uint16_t count = r.Int<uint16_t>("quad-tree bit count");
    q.bits = UnpackBits(r.Bytes((count + 7) / 8, "quad-tree bits"), count);
    s.quadtree = std::move(q);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after bitstream");
  return s;
}

BitstreamSections SectionSizes(const Bitstream& s) {
  BitstreamSections sec;
  sec.header = 4 + 4 + 1 + 1 + 2 + 2 + 1;
  sec.z = 4 + static_cast<int64_t>(s.z.size());
  sec.y = 4 + static_cast<int64_t>(s.y.size());
  if (s.quadtree) {
    sec.quadtree = 1 + 2 + static_cast<int64_t>((s.quadtree->bits.size() + 7) / 8);
  }
  return sec;
}

uint8_t LambdaIndex(double lambda) {
  for (size_t i = 0; i < std::size(kLambdaMenu); ++i) {
    if (kLambdaMenu[i] == lambda) return static_cast<uint8_t>(i);
  }
  return kCustomLambdaIndex;
}

double LambdaFromIndex(uint8_t index) {
  if (index >= std::size(kLambdaMenu)) {
    throw ContractError("lambda index " + std::to_string(index) + " is not on the menu");
  }
  return kLambdaMenu[index];
}

template <typename T>
std::vector<uint8_t> SerializeCheckpoint(const ParamStore<T>& params) {
  ByteWriter w;
  w.Magic(kCheckpointMagic);
  w.Int<uint32_t>(kCheckpointVersion);
  w.Int<uint32_t>(static_cast<uint32_t>(params.entries().size()));
  for (const auto& [name, tensor] : params.entries()) {
    w.Int<uint32_t>(static_cast<uint32_t>(name.size()));
    w.Bytes({reinterpret_cast<const uint8_t*>(name.data()), name.size()});
    w.Int<uint8_t>(sizeof(T) == 4 ? 0 : 1);
    w.Int<uint8_t>(4);
    const Shape& s = tensor.shape();
    for (int64_t d : {s.n, s.c, s.h, s.w}) w.Int<uint32_t>(static_cast<uint32_t>(d));
    for (T v : tensor.values()) {
      if constexpr (sizeof(T) == 4) {
        w.Int<uint32_t>(std::bit_cast<uint32_t>(v));
      } else {
        w.Int<uint64_t>(std::bit_cast<uint64_t>(v));
      }
    }
  }
  return w.Take();
}

template <typename T>
ParamStore<T> DeserializeCheckpoint(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.Magic(kCheckpointMagic)) throw FormatError("not a GDCK checkpoint");
  const uint32_t version = r.Int<uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t count = r.Int<uint32_t>("entry count");
  ParamStore<T> store;
  for (uint32_t e = 0; e < count; ++e) {
    const uint32_t len = r.Int<uint32_t>("name length");
    auto nb = r.Bytes(len, "name");
    std::string name(nb.begin(), nb.end());
    const uint8_t dtype = r.Int<uint8_t>("dtype");
    if (dtype > 1) throw FormatError("unknown dtype tag " + std::to_string(dtype));
    const uint8_t rank = r.Int<uint8_t>("rank");
    if (rank != 4) throw FormatError("unsupported rank " + std::to_string(rank));
    Shape s;
    s.n = r.Int<uint32_t>("dims");
    s.c = r.Int<uint32_t>("dims");
    s.h = r.Int<uint32_t>("dims");
    s.w = r.Int<uint32_t>("dims");
    const size_t width = dtype == 0 ? 4 : 8;
    if (s.numel() < 0 ||
        static_cast<uint64_t>(s.numel()) > r.remaining() / width) {
      throw StreamError("truncated tensor '" + name + "'");
    }
    std::vector<T> values(s.numel());
    for (auto& v : values) {
      if (dtype == 0) {
        v = static_cast<T>(std::bit_cast<float>(r.Int<uint32_t>("values")));
      } else {
        v = static_cast<T>(std::bit_cast<double>(r.Int<uint64_t>("values")));
      }
    }
    try {
      store.Add(name, Tensor<T>(s, std::move(values), true));
    } catch (const ContractError& err) {
      throw FormatError(err.what());
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  return store;
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StreamError("cannot open '" + path + "'");
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StreamError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StreamError("write failed for '" + path + "'");
}

void WriteTextFile(const std::string& path, const std::string& text) {
  WriteFileBytes(path, {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

template <typename T>
void SaveCheckpoint(const ParamStore<T>& params, const std::string& path) {
  WriteFileBytes(path, SerializeCheckpoint(params));
}

template <typename T>
ParamStore<T> LoadCheckpoint(const std::string& path) {
  return DeserializeCheckpoint<T>(ReadFileBytes(path));
}

template <typename T>
Tensor<T> DecodePpm(std::span<const uint8_t> bytes) {
  size_t pos = 0;
  auto skip_space = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> int64_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError("malformed pixmap header");
    }
    int64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (int64_t{1} << 20)) throw FormatError("pixmap dimension too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '3')) {
    throw FormatError("unsupported image format (expected P6 or P3 pixmap)");
  }
  const bool binary = bytes[1] == '6';
  pos = 2;
  const int64_t w = number();
  const int64_t h = number();
  const int64_t maxval = number();
  if (w <= 0 || h <= 0) throw FormatError("empty pixmap");
  if (maxval != 255) throw FormatError("only 8-bit pixmaps (maxval 255) are supported");
  const Shape s{1, 3, h, w};
  std::vector<T> out(s.numel());
  if (binary) {
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
      throw FormatError("malformed pixmap header");
    }
    ++pos;
    if (bytes.size() - pos < static_cast<size_t>(3 * w * h)) {
      throw StreamError("truncated pixmap data");
    }
    for (int64_t p = 0; p < w * h; ++p) {
      for (int64_t c = 0; c < 3; ++c) {
        out[c * w * h + p] = static_cast<T>(bytes[pos + 3 * p + c] / 255.0);
      }
    }
  } else {
    for (int64_t p = 0; p < w * h; ++p) {
      for (int64_t c = 0; c < 3; ++c) {
        const int64_t v = number();
        if (v > 255) throw FormatError("pixmap sample above maxval");
        out[c * w * h + p] = static_cast<T>(v / 255.0);
      }
    }
  }
  return Tensor<T>(s, std::move(out));
}

template <typename T>
std::vector<uint8_t> EncodePpm(const Tensor<T>& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw DimensionError("pixmap needs [1,3,H,W], got " + s.ToString());
  const std::string header =
      "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  auto v = image.values();
  for (int64_t p = 0; p < s.plane(); ++p) {
    for (int64_t c = 0; c < 3; ++c) {
      const double x = std::clamp(static_cast<double>(v[c * s.plane() + p]), 0.0, 1.0);
      out.push_back(static_cast<uint8_t>(RoundHalfAway(x * 255.0)));
    }
  }
  return out;
}

template <typename T>
Tensor<T> LoadImage(const std::string& path) {
  return DecodePpm<T>(ReadFileBytes(path));
}

template <typename T>
void WriteImage(const Tensor<T>& image, const std::string& path) {
  WriteFileBytes(path, EncodePpm(image));
}

KeyValueConfig KeyValueConfig::Parse(const std::string& text) {
  KeyValueConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    if (!cfg.entries_.emplace(key, value).second) {
      throw FormatError("config key '" + key + "' repeated");
    }
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return Parse(std::string(bytes.begin(), bytes.end()));
}

bool KeyValueConfig::Has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

int64_t KeyValueConfig::GetInt(const std::string& key, int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const int64_t v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("config key '" + key + "' expects an integer");
  }
}

double KeyValueConfig::GetDouble(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : ParseNumber(it->second, "'" + key + "'");
}

bool KeyValueConfig::GetBool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw FormatError("config key '" + key + "' expects true or false");
}

void KeyValueConfig::RejectUnknown(std::span<const std::string> known) const {
  for (const auto& [key, value] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ContractError("unknown config key '" + key + "'");
    }
  }
}

void ExperimentConfig::Validate() const {
  coder.Validate();
  train.Validate();
  if (pairs.patch <= 0 || pairs.patch % kFrameAlignment != 0) {
    throw ContractError("patch must be a positive multiple of 16");
  }
  if (pair_count <= 0) throw ContractError("pairs must be positive");
  if (pairs.degrade_step < 0) throw ContractError("degrade_step must be non-negative");
}

ExperimentConfig ParseExperimentConfig(const KeyValueConfig& kv) {
  static const std::string kKnown[] = {
      "coder", "C", "N", "Y", "Z", "Yp", "G", "lambda", "learning_rate", "steps", "seed",
      "threshold", "patch", "pairs", "degrade_step", "dataset", "checkpoint", "log"};
  kv.RejectUnknown(kKnown);
  ExperimentConfig cfg;
  ParseCoderName(kv.GetString("coder", "diff"), cfg.coder);
  if (kv.GetInt("C", 3) != 3) throw ContractError("only 3-channel frames are supported");
  cfg.coder.hidden = kv.GetInt("N", cfg.coder.hidden);
  cfg.coder.latent = kv.GetInt("Y", cfg.coder.latent);
  cfg.coder.hyper = kv.GetInt("Z", cfg.coder.hyper);
  if (kv.Has("Yp")) {
    if (cfg.coder.kind != CoderKind::kCodecNet) {
      throw ContractError("Yp applies to codecnet only");
    }
    cfg.coder.prediction_latent = kv.GetInt("Yp", 0);
  }
  if (kv.Has("G") && kv.GetInt("G", 0) != cfg.coder.g_channels()) {
    throw ContractError("G is fixed by the coder kind (3 for gdc, 16 for xgdc)");
  }
  cfg.train.lambda = kv.GetDouble("lambda", cfg.train.lambda);
  cfg.train.learning_rate = kv.GetDouble("learning_rate", cfg.train.learning_rate);
  cfg.train.steps = kv.GetInt("steps", cfg.train.steps);
  cfg.train.seed = static_cast<uint64_t>(kv.GetInt("seed", 0));
  cfg.train.target_threshold = kv.GetDouble("threshold", cfg.train.target_threshold);
  cfg.pairs.patch = kv.GetInt("patch", cfg.pairs.patch);
  cfg.pair_count = kv.GetInt("pairs", cfg.pair_count);
  cfg.pairs.degrade_step = kv.GetDouble("degrade_step", cfg.pairs.degrade_step);
  cfg.dataset = kv.GetString("dataset", "");
  cfg.checkpoint = kv.GetString("checkpoint", "");
  cfg.log = kv.GetString("log", "");
  cfg.Validate();
  return cfg;
}

RdCurve ParseCurveCsv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw FormatError("empty curve file");
  const std::vector<std::string> header = SplitCsv(Trim(line));
  auto column = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int bpp_col = column("bpp");
  const int psnr_col = column("psnr");
  const int lambda_col = column("lambda");
  if (bpp_col < 0 || psnr_col < 0) throw FormatError("curve CSV needs bpp and psnr columns");
  struct Acc {
    double bpp = 0, psnr = 0;
    int n = 0;
  };
  std::vector<std::pair<double, Acc>> groups;
  int row = 0;
  while (std::getline(ss, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsv(line);
    const int need = std::max({bpp_col, psnr_col, lambda_col});
    if (static_cast<int>(cells.size()) <= need) throw FormatError("short CSV row");
    const double key = lambda_col >= 0 ? ParseNumber(cells[lambda_col], "lambda") : row;
    ++row;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.bpp += ParseNumber(cells[bpp_col], "bpp");
    it->second.psnr += ParseNumber(cells[psnr_col], "psnr");
    ++it->second.n;
  }
  RdCurve curve;
  for (const auto& [key, acc] : groups) {
    curve.push_back({acc.bpp / acc.n, acc.psnr / acc.n, lambda_col >= 0 ? key : 0.0});
  }
  std::sort(curve.begin(), curve.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return curve;
}

RdCurve ReadCurveCsv(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ParseCurveCsv(std::string(bytes.begin(), bytes.end()));
}

#define GDC_INSTANTIATE(T)                                                     \
  template std::vector<uint8_t> SerializeCheckpoint(const ParamStore<T>&);     \
  template ParamStore<T> DeserializeCheckpoint<T>(std::span<const uint8_t>);   \
  template void SaveCheckpoint(const ParamStore<T>&, const std::string&);      \
  template ParamStore<T> LoadCheckpoint<T>(const std::string&);                \
  template Tensor<T> DecodePpm<T>(std::span<const uint8_t>);                   \
  template std::vector<uint8_t> EncodePpm(const Tensor<T>&);                   \
  template Tensor<T> LoadImage<T>(const std::string&);                         \
  template void WriteImage(const Tensor<T>&, const std::string&);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
