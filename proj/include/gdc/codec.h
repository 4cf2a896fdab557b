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

// Frame-level coding of arbitrary-size frames: reflective padding to the
// coder alignment, entropy coding, xGDC output selection and the container.

#ifndef GDC_CODEC_H_
#define GDC_CODEC_H_

#include <cstdint>
#include <vector>

#include "gdc/coders.h"
#include "gdc/evaluation.h"
#include "gdc/io.h"
#include "gdc/tensor.h"

namespace gdc {

// Mirrors the bottom and right edges (without repeating the edge sample) up
// to the next multiple of |multiple|.
template <typename T>
Tensor<T> PadReflect(const Tensor<T>& frame, int64_t multiple);
template <typename T>
Tensor<T> CropFrame(const Tensor<T>& frame, int64_t height, int64_t width);

struct FrameCodingOptions {
  double lambda = 1024;
  // xGDC: per-block switching; otherwise one of the two outputs per frame.
  bool quadtree = false;
  int64_t min_block = 4;
  int64_t max_block = 64;
};

template <typename T>
struct EncodedFrameResult {
  Bitstream stream;
  std::vector<uint8_t> bytes;
  Tensor<T> reconstruction;  // What DecodeFrame returns for |bytes|.
  double estimated_payload_bits = 0.0;
  int64_t payload_bits = 0;  // z and y payloads only.
  int64_t side_bits = 0;
  double bpp = 0.0;          // All container bits.
  double psnr = 0.0;
  double mode_d_fraction = 1.0;
};

template <typename T>
EncodedFrameResult<T> EncodeFrame(const Coder<T>& coder, const Tensor<T>& x,
                                  const Tensor<T>& x_tilde,
                                  const FrameCodingOptions& options);

// Needs only the prediction and the container.
template <typename T>
Tensor<T> DecodeFrame(const Coder<T>& coder, const Tensor<T>& x_tilde,
                      const Bitstream& stream);

}  // namespace gdc

#endif  // GDC_CODEC_H_
