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

#include "gdc/codec.h"

#include <cmath>
#include <limits>

#include "gdc/error.h"

namespace gdc {

namespace {

// Index into [0, n) after mirroring about the edges (period 2n - 2).
int64_t Mirror(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * n - 2;
  i %= period;
  return i < n ? i : period - i;
}

template <typename T>
void CheckFrame(const Tensor<T>& frame, const char* what) {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3 || s.h <= 0 || s.w <= 0) {
    throw DimensionError(std::string(what) + " must be [1,3,H,W], got " + s.ToString());
  }
  if (s.h > std::numeric_limits<uint16_t>::max() ||
      s.w > std::numeric_limits<uint16_t>::max()) {
    throw ContractError(std::string(what) + " exceeds 65535 pixels per side");
  }
}

int64_t RoundUp(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

}  // namespace

template <typename T>
Tensor<T> PadReflect(const Tensor<T>& frame, int64_t multiple) {
  const Shape& s = frame.shape();
  const Shape p{s.n, s.c, RoundUp(s.h, multiple), RoundUp(s.w, multiple)};
  if (p == s) return frame;
  auto v = frame.values();
  std::vector<T> out(p.numel());
  for (int64_t plane = 0; plane < s.n * s.c; ++plane) {
    for (int64_t r = 0; r < p.h; ++r) {
      const int64_t sr = Mirror(r, s.h);
      for (int64_t c = 0; c < p.w; ++c) {
        out[(plane * p.h + r) * p.w + c] = v[(plane * s.h + sr) * s.w + Mirror(c, s.w)];
      }
    }
  }
  return Tensor<T>(p, std::move(out));
}

template <typename T>
Tensor<T> CropFrame(const Tensor<T>& frame, int64_t height, int64_t width) {
  const Shape& s = frame.shape();
  if (height > s.h || width > s.w || height <= 0 || width <= 0) {
    throw DimensionError("crop larger than the frame");
  }
  if (height == s.h && width == s.w) return frame;
  auto v = frame.values();
  const Shape o{s.n, s.c, height, width};
  std::vector<T> out(o.numel());
  for (int64_t plane = 0; plane < s.n * s.c; ++plane) {
    for (int64_t r = 0; r < height; ++r) {
      for (int64_t c = 0; c < width; ++c) {
        out[(plane * height + r) * width + c] = v[(plane * s.h + r) * s.w + c];
      }
    }
  }
  return Tensor<T>(o, std::move(out));
}

template <typename T>
EncodedFrameResult<T> EncodeFrame(const Coder<T>& coder, const Tensor<T>& x,
                                  const Tensor<T>& x_tilde,
                                  const FrameCodingOptions& options) {
  CheckFrame(x, "frame");
  CheckFrame(x_tilde, "prediction");
  if (x.shape() != x_tilde.shape()) throw DimensionError("frame and prediction differ");
  const Shape& s = x.shape();
  const bool xgdc = coder.config().kind == CoderKind::kXgdc;
  if (options.quadtree && !xgdc) {
    throw ContractError("quad-tree switching needs an xgdc coder");
  }
  EncodedFrame<T> enc = coder.Encode(PadReflect(x, kFrameAlignment),
                                     PadReflect(x_tilde, kFrameAlignment));
  EncodedFrameResult<T> result;
  Bitstream& st = result.stream;
  st.kind = coder.config().kind;
  st.lambda_index = LambdaIndex(options.lambda);
  st.width = static_cast<uint16_t>(s.w);
  st.height = static_cast<uint16_t>(s.h);
  st.z = enc.z.bytes;
  st.y = enc.y.bytes;
  result.estimated_payload_bits = enc.z.total_estimated_bits() + enc.y.total_estimated_bits();
  result.payload_bits = enc.z.bits() + enc.y.bits();

  auto crop = [&](const std::optional<Tensor<T>>& t) { return CropFrame(*t, s.h, s.w); };
  if (!xgdc) {
    result.reconstruction = crop(enc.x_hat_d ? enc.x_hat_d : enc.x_hat_g);
    result.mode_d_fraction = enc.x_hat_d ? 1.0 : 0.0;
  } else if (options.quadtree) {
    QuadTreeResult<T> qt = QuadTreeSearch(x, crop(enc.x_hat_d), crop(enc.x_hat_g),
                                          options.lambda, options.min_block,
                                          options.max_block);
    st.quadtree = QuadTreeSideInfo{options.min_block, options.max_block,
                                   qt.tree.Serialize()};
    result.reconstruction = qt.merged;
    result.side_bits = qt.side_bits;
    result.mode_d_fraction = qt.tree.ModeFraction(BlockMode::kD);
  } else {
    // Both outputs share one latent, so only distortion differs.
    const HybridCandidate<T> candidates[2] = {{crop(enc.x_hat_d), 0.0},
                                              {crop(enc.x_hat_g), 0.0}};
    const HybridChoice choice =
        FrameHybridSelect<T>(candidates, x, options.lambda);
    st.frame_mode_g = choice.index == 1;
    result.reconstruction = candidates[choice.index].reconstruction;
    result.mode_d_fraction = st.frame_mode_g ? 0.0 : 1.0;
  }
  result.bytes = WriteBitstream(st);
  result.bpp = Bpp(8.0 * static_cast<double>(result.bytes.size()), s.w, s.h);
  result.psnr = Psnr(result.reconstruction, x);
  return result;
}

template <typename T>
Tensor<T> DecodeFrame(const Coder<T>& coder, const Tensor<T>& x_tilde,
                      const Bitstream& stream) {
  CheckFrame(x_tilde, "prediction");
  const Shape& s = x_tilde.shape();
  if (stream.kind != coder.config().kind) {
    throw FormatError("bitstream coder kind does not match the model");
  }
  if (stream.width != s.w || stream.height != s.h) {
    throw DimensionError("prediction size does not match the bitstream header");
  }
  const bool xgdc = stream.kind == CoderKind::kXgdc;
  if (!xgdc && (stream.quadtree || stream.frame_mode_g)) {
    throw FormatError("mode side info is only valid for xgdc streams");
  }
  DecodedFrame<T> dec = coder.Decode(PadReflect(x_tilde, kFrameAlignment), stream.z, stream.y);
  auto crop = [&](const std::optional<Tensor<T>>& t) { return CropFrame(*t, s.h, s.w); };
  if (!xgdc) return crop(dec.x_hat_d ? dec.x_hat_d : dec.x_hat_g);
  if (stream.quadtree) {
    const auto& q = *stream.quadtree;
    const QuadTree tree = QuadTree::Deserialize(q.bits, s.w, s.h, q.min_block, q.max_block);
    return MergeByTree(tree, crop(dec.x_hat_d), crop(dec.x_hat_g));
  }
  return crop(stream.frame_mode_g ? dec.x_hat_g : dec.x_hat_d);
}

#define GDC_INSTANTIATE(T)                                                         \
  template Tensor<T> PadReflect(const Tensor<T>&, int64_t);                        \
  template Tensor<T> CropFrame(const Tensor<T>&, int64_t, int64_t);                \
  template EncodedFrameResult<T> EncodeFrame(const Coder<T>&, const Tensor<T>&,    \
                                             const Tensor<T>&,                     \
                                             const FrameCodingOptions&);           \
  template Tensor<T> DecodeFrame(const Coder<T>&, const Tensor<T>&,                \
                                 const Bitstream&);

GDC_INSTANTIATE(float)
GDC_INSTANTIATE(double)
#undef GDC_INSTANTIATE

}  // namespace gdc
