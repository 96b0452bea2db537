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


#ifndef ESSL_CONTAINER_HPP_
#define ESSL_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "essl/image.hpp"

namespace essl::container {

// On-disk layout, all integers little-endian:
//
//   [0, 4096)            header (kHeaderBytes used, rest zero)
//   [table, +24*N)       SampleRecord table, table offset page aligned
//   [payload, EOF)       JPEG payloads, each starting on a 64-byte boundary,
//                        payload region page aligned
inline constexpr char kMagic[4] = {'E', 'S', 'S', 'L'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint32_t kAlignment = 4096;
inline constexpr std::uint32_t kPayloadAlignment = 64;
inline constexpr std::size_t kHeaderBytes = 45;
inline constexpr std::size_t kRecordBytes = 24;
inline constexpr int kMinResolution = 64;

struct ContainerHeader {
  char magic[4] = {'E', 'S', 'S', 'L'};
  std::uint16_t version = kVersion;
  std::uint64_t sample_count = 0;
  std::uint64_t sample_table_offset = 0;
  std::uint64_t payload_offset = 0;
  std::uint16_t max_resolution = 0;
  std::uint8_t quality = 0;
  std::uint64_t build_seed = 0;
  std::uint32_t alignment = kAlignment;

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct SampleRecord {
  std::uint64_t payload_offset = 0;
  std::uint32_t payload_length = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint32_t label = 0;
  std::uint32_t checksum = 0;  // CRC-32 (zlib polynomial) of the payload

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

void encode_header(const ContainerHeader& h, std::uint8_t* out);  // kHeaderBytes
ContainerHeader decode_header(const std::uint8_t* in);
void encode_record(const SampleRecord& r, std::uint8_t* out);  // kRecordBytes
SampleRecord decode_record(const std::uint8_t* in);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

struct BuildSpec {
  std::filesystem::path source;  // directory of class sub-folders
  int max_resolution = 500;
  int quality = 95;
  std::uint64_t seed = 0;
  int workers = 0;  // <= 0: hardware concurrency; never affects output bytes
};

struct BuildSummary {
  std::uint64_t sample_count = 0;
  std::uint64_t total_bytes = 0;  // size of the written file
  std::uint32_t class_count = 0;
};

/// A source image and its class id.
struct SourceItem {
  std::filesystem::path path;
  std::uint32_t label = 0;
};

/// Class folders in lexicographic order get ids 0, 1, ...; files inside a
/// folder are visited in lexicographic order. Hidden entries are skipped,
/// as are files whose extension is not a supported image type.
std::vector<SourceItem> scan_source(const std::filesystem::path& dir);

/// Reads a source image: baseline/progressive JPEG, or binary PPM (P6).
/// Throws IoError / DecodeError naming the path.
RgbImage load_image(const std::filesystem::path& path);

/// Binary PPM writer used for lossless originals.
void save_ppm(const RgbImage& image, const std::filesystem::path& path);

/// Largest-side downscale target: (w, h) scaled so max(w, h) <= max_side,
/// rounding to nearest and never below 1. Images already small are unchanged.
std::pair<int, int> fit_within(int width, int height, int max_side);

/// Resize (bilinear, downscale only) and re-encode one image the way the
/// builder stores it.
std::vector<std::uint8_t> prepare_payload(const RgbImage& image, int max_resolution, int quality,
                                          int* out_w = nullptr, int* out_h = nullptr);

/// Builds a container from a class-folder tree. Output bytes depend only on
/// the source pixels, file order and (max_resolution, quality, seed).
BuildSummary build_container(const BuildSpec& spec, const std::filesystem::path& out);

/// Same, from an explicit item list (labels taken from the items).
BuildSummary build_container(const std::vector<SourceItem>& items, const BuildSpec& spec,
                             const std::filesystem::path& out);

/// Borrowed view of one stored sample; valid while the container is alive.
struct SampleView {
  std::span<const std::uint8_t> jpeg;
  int width = 0;
  int height = 0;
  std::uint32_t label = 0;
};

/// Memory-mapped, read-only container. Opening validates the header and
/// the record table bounds but touches no payload bytes. All const methods
/// are safe to call concurrently.
class Container {
 public:
  /// Throws IoError (missing/unreadable), FormatError (magic, version,
  /// alignment), CorruptionError (file too short for its record table).
  static std::shared_ptr<const Container> open(const std::filesystem::path& path);

  ~Container();
  Container(const Container&) = delete;
  Container& operator=(const Container&) = delete;

  const ContainerHeader& header() const noexcept { return header_; }
  std::uint64_t size() const noexcept { return header_.sample_count; }
  std::uint64_t file_size() const noexcept { return size_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Throws RangeError for index >= size().
  SampleRecord record(std::uint64_t index) const;

  /// Bounds-checks and CRC-verifies the payload. Throws RangeError for a bad
  /// index and CorruptionError (carrying the index) for a truncated or
  /// mismatching payload.
  SampleView read(std::uint64_t index) const;

 private:
  Container() = default;

  std::filesystem::path path_;
  const std::uint8_t* data_ = nullptr;
  std::uint64_t size_ = 0;
  ContainerHeader header_;
};

using ContainerHandle = std::shared_ptr<const Container>;

}  // namespace essl::container

#endif  // ESSL_CONTAINER_HPP_
