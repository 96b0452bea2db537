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

#include <cstring>
#include <string>

#include "essl/error.hpp"
#include "essl/image.hpp"

namespace essl {

RgbImage crop(const RgbImage& src, const CropRect& rect) {
  if (!rect_fits(rect, src.width(), src.height())) {
    throw RangeError("crop rect does not fit " + std::to_string(src.width()) + "x" +
                     std::to_string(src.height()) + " image");
  }
  RgbImage out(rect.w, rect.h);
  const std::size_t bytes = static_cast<std::size_t>(rect.w) * 3;
  for (int y = 0; y < rect.h; ++y) {
    std::memcpy(out.row(y), src.row(rect.y + y) + static_cast<std::size_t>(rect.x) * 3, bytes);
  }
  return out;
}

}  // namespace essl
