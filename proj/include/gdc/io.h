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

// File formats. All multi-byte integers are little-endian.
//
// Bitstream ("GDCB"):
//   magic[4] version:u32 kind:u8 lambda_index:u8 width:u16 height:u16 flags:u8
//   z_len:u32 z[z_len] y_len:u32 y[y_len]
//   if flags & 1: blocks:u8 (log2 min << 4 | log2 max) bit_count:u16
//                 bits[ceil(bit_count / 8)] (MSB first)
//   flags bit 1 selects the x^_g output of an xGDC frame without a tree.
//
// Checkpoint ("GDCK"):
//   magic[4] version:u32 count:u32, then per entry
//   name_len:u32 name dtype:u8 (0 f32, 1 f64) rank:u8 (= 4) dims:u32[4] values

#ifndef GDC_IO_H_
#define GDC_IO_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gdc/coders.h"
#include "gdc/evaluation.h"
#include "gdc/layers.h"
#include "gdc/tensor.h"
#include "gdc/training.h"

namespace gdc {

inline constexpr uint32_t kBitstreamVersion = 1;
inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr uint8_t kCustomLambdaIndex = 255;

struct QuadTreeSideInfo {
  int64_t min_block = 4;
  int64_t max_block = 256;
  std::vector<bool> bits;

  bool operator==(const QuadTreeSideInfo&) const = default;
};

struct Bitstream {
  CoderKind kind = CoderKind::kDiff;
  uint8_t lambda_index = kCustomLambdaIndex;
  uint16_t width = 0;
  uint16_t height = 0;
  bool frame_mode_g = false;
  std::vector<uint8_t> z;
  std::vector<uint8_t> y;
  std::optional<QuadTreeSideInfo> quadtree;

  bool operator==(const Bitstream&) const = default;
};

std::vector<uint8_t> WriteBitstream(const Bitstream& stream);
// Validates every length before touching payload bytes. Throws FormatError
// on bad magic, version, kind or trailing data, StreamError on truncation.
Bitstream ReadBitstream(std::span<const uint8_t> bytes);

// Byte sizes of the header, z section, y section and quad-tree section;
// they sum to the serialized length.
struct BitstreamSections {
  int64_t header = 0;
  int64_t z = 0;
  int64_t y = 0;
  int64_t quadtree = 0;

  int64_t total() const { return header + z + y + quadtree; }
};
BitstreamSections SectionSizes(const Bitstream& stream);

uint8_t LambdaIndex(double lambda);
// Throws ContractError for kCustomLambdaIndex or an out-of-menu index.
double LambdaFromIndex(uint8_t index);

template <typename T>
std::vector<uint8_t> SerializeCheckpoint(const ParamStore<T>& params);
// Converts stored values to T when the dtypes differ.
template <typename T>
ParamStore<T> DeserializeCheckpoint(std::span<const uint8_t> bytes);
template <typename T>
void SaveCheckpoint(const ParamStore<T>& params, const std::string& path);
template <typename T>
ParamStore<T> LoadCheckpoint(const std::string& path);

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);
void WriteTextFile(const std::string& path, const std::string& text);

// Binary (P6) or ASCII (P3) portable pixmap with maxval 255, mapped to
// [1, 3, H, W] by /255.
template <typename T>
Tensor<T> DecodePpm(std::span<const uint8_t> bytes);
// Writes P6; samples are clipped to [0, 1] and rounded half away from zero.
template <typename T>
std::vector<uint8_t> EncodePpm(const Tensor<T>& image);
template <typename T>
Tensor<T> LoadImage(const std::string& path);
template <typename T>
void WriteImage(const Tensor<T>& image, const std::string& path);

// "key = value" lines; '#' starts a comment. Duplicate keys are errors.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(const std::string& text);
  static KeyValueConfig Load(const std::string& path);

  bool Has(const std::string& key) const;
  std::string GetString(const std::string& key, const std::string& fallback) const;
  int64_t GetInt(const std::string& key, int64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  // Throws ContractError naming the first key not in |known|.
  void RejectUnknown(std::span<const std::string> known) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct ExperimentConfig {
  CoderConfig coder;
  TrainConfig train;
  PairConfig pairs;
  int64_t pair_count = 200;
  std::string dataset;     // Directory of .ppm files; empty = synthetic.
  std::string checkpoint;  // Output checkpoint path.
  std::string log;         // Progress log path; empty = stdout.

  void Validate() const;
};

// Keys: coder, C, N, Y, Z, Yp, G, lambda, learning_rate, steps, seed,
// threshold, patch, pairs, degrade_step, dataset, checkpoint, log.
ExperimentConfig ParseExperimentConfig(const KeyValueConfig& kv);

// Reads the "bpp" and "psnr" columns of a CSV with a header row. Rows sharing
// a "lambda" value are averaged into one point; the result is sorted by bpp.
RdCurve ReadCurveCsv(const std::string& path);
RdCurve ParseCurveCsv(const std::string& text);

}  // namespace gdc

#endif  // GDC_IO_H_
