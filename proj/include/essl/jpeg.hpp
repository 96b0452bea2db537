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

#ifndef ESSL_JPEG_HPP_
#define ESSL_JPEG_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "essl/image.hpp"

namespace essl::jpeg {

/// Work counters for one decode. An MCU is "entropy decoded" once its
/// Huffman data has been consumed and "reconstructed" once it went through
/// dequantization, IDCT, upsampling and colour conversion.
struct DecodeStats {
  std::uint64_t mcus_entropy_decoded = 0;
  std::uint64_t mcus_reconstructed = 0;
  std::uint64_t mcus_total = 0;
  /// Set when the stream could not be decoded region-wise (progressive or
  /// multi-scan files) and the whole image was decoded before cropping.
  bool fallback_full = false;

  DecodeStats& operator+=(const DecodeStats& o) noexcept {
    mcus_entropy_decoded += o.mcus_entropy_decoded;
    mcus_reconstructed += o.mcus_reconstructed;
    mcus_total += o.mcus_total;
    fallback_full = fallback_full || o.fallback_full;
    return *this;
  }
};

struct Decoded {
  RgbImage image;
  DecodeStats stats;
};

/// Frame-level facts available from the headers alone.
struct JpegInfo {
  int width = 0;
  int height = 0;
  int components = 0;
  bool progressive = false;
  int mcu_width = 0;   // pixels
  int mcu_height = 0;  // pixels
  int mcus_per_row = 0;
  int mcu_rows = 0;
};

/// Parses markers up to the first scan header. Throws DecodeError.
JpegInfo read_info(std::span<const std::uint8_t> bytes);

/// Decodes every MCU of the image.
Decoded decode_full(std::span<const std::uint8_t> bytes);

/// Decodes only what `rect` needs: entropy decoding stops after the last MCU
/// row touching the rect, and only MCUs intersecting it are reconstructed.
/// The output is bit-identical to crop(decode_full(bytes).image, rect).
/// Throws RangeError for a rect outside the image, DecodeError otherwise.
Decoded decode_crop(std::span<const std::uint8_t> bytes, const CropRect& rect);

struct EncodeOptions {
  int quality = 95;
  /// MCUs between restart markers; 0 disables them.
  int restart_interval = 0;
};

/// Baseline sequential JPEG, 4:2:0, Annex K Huffman tables, quantization
/// tables scaled by `quality` in [1, 100]. Output bytes are a pure function
/// of the input pixels and options.
std::vector<std::uint8_t> encode(const RgbImage& image, const EncodeOptions& options);

inline std::vector<std::uint8_t> encode(const RgbImage& image, int quality) {
  return encode(image, EncodeOptions{quality, 0});
}

/// Quantization table (natural order) the encoder emits for `quality`.
std::vector<std::uint16_t> scaled_quant_table(bool chroma, int quality);

}  // namespace essl::jpeg

#endif  // ESSL_JPEG_HPP_
