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

#ifndef ESSL_IMAGE_HPP_
#define ESSL_IMAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace essl {

/// Pixel-space window: top-left corner plus extent.
struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const CropRect&, const CropRect&) = default;
};

/// 8-bit interleaved RGB image, rows packed without padding.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ <= 0 || height_ <= 0; }
  std::size_t stride() const noexcept { return static_cast<std::size_t>(width_) * 3; }

  std::uint8_t* row(int y) noexcept { return pixels_.data() + static_cast<std::size_t>(y) * stride(); }
  const std::uint8_t* row(int y) const noexcept {
    return pixels_.data() + static_cast<std::size_t>(y) * stride();
  }

  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Copies `rect` out of `src`. Throws RangeError if the rect does not fit.
RgbImage crop(const RgbImage& src, const CropRect& rect);

/// True when `rect` is a non-empty window fully inside a width x height image.
constexpr bool rect_fits(const CropRect& rect, int width, int height) noexcept {
  return rect.x >= 0 && rect.y >= 0 && rect.w >= 1 && rect.h >= 1 &&
         rect.x + rect.w <= width && rect.y + rect.h <= height;
}

}  // namespace essl

#endif  // ESSL_IMAGE_HPP_
