// Copyright (c) 2026, The ESSL Authors. All rights reserved.
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


#include <cstdint>
#include <vector>

#include "essl/error.hpp"
#include "essl/pipeline.hpp"

namespace essl::pipeline {

BilinearTap bilinear_tap(int out_index, int in_size, int out_size) {
  // Source coordinate (x + 0.5) * in / out - 0.5, in 1/2048 pixel units,
  // rounded half up; all-integer so every platform agrees.
  const std::int64_t num = (2 * std::int64_t{out_index} + 1) * in_size - out_size;
  std::int64_t pos = (num * 2048 + out_size) / (2 * std::int64_t{out_size});
  if (num * 2048 + out_size < 0) pos = 0;
  BilinearTap t;
  t.i0 = static_cast<int>(pos >> 11);
  t.w1 = static_cast<int>(pos & 2047);
  if (t.i0 >= in_size - 1) {
    t.i0 = t.i1 = in_size - 1;
    t.w1 = 0;
  } else {
    t.i1 = t.i0 + 1;
  }
  return t;
}

RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h) {
  if (src.empty()) throw RangeError("cannot resize an empty image");
  if (out_w < 1 || out_h < 1) throw RangeError("resize target must be at least 1x1");
  if (out_w == src.width() && out_h == src.height()) return src;

  std::vector<BilinearTap> xt(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) xt[static_cast<std::size_t>(x)] = bilinear_tap(x, src.width(), out_w);

  // Horizontal pass results are exact (no rounding), cached per source row.
  const std::size_t row_len = static_cast<std::size_t>(out_w) * 3;
  std::vector<std::uint32_t> rows(static_cast<std::size_t>(src.height()) * row_len);
  std::vector<char> done(static_cast<std::size_t>(src.height()), 0);
  auto hrow = [&](int y) -> const std::uint32_t* {
    std::uint32_t* dst = rows.data() + static_cast<std::size_t>(y) * row_len;
    if (done[static_cast<std::size_t>(y)]) return dst;
    const std::uint8_t* s = src.row(y);
    for (int x = 0; x < out_w; ++x) {
      const BilinearTap& t = xt[static_cast<std::size_t>(x)];
      const std::uint8_t* a = s + t.i0 * 3;
      const std::uint8_t* b = s + t.i1 * 3;
      const std::uint32_t w0 = 2048 - t.w1, w1 = t.w1;
      dst[x * 3 + 0] = a[0] * w0 + b[0] * w1;
      dst[x * 3 + 1] = a[1] * w0 + b[1] * w1;
      dst[x * 3 + 2] = a[2] * w0 + b[2] * w1;
    }
    done[static_cast<std::size_t>(y)] = 1;
    return dst;
  };

  RgbImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const BilinearTap t = bilinear_tap(y, src.height(), out_h);
    const std::uint32_t* r0 = hrow(t.i0);
    const std::uint32_t* r1 = hrow(t.i1);
    const std::uint32_t w0 = 2048 - t.w1, w1 = t.w1;
    std::uint8_t* d = out.row(y);
    for (std::size_t i = 0; i < row_len; ++i) {
      d[i] = static_cast<std::uint8_t>((r0[i] * w0 + r1[i] * w1 + (1u << 21)) >> 22);
    }
  }
  return out;
}

}  // namespace essl::pipeline
