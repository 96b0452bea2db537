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


#ifndef ESSL_BENCH_HPP_
#define ESSL_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "essl/container.hpp"
#include "essl/image.hpp"
#include "essl/jpeg.hpp"
#include "essl/pipeline.hpp"

namespace essl::bench {

/// Cumulative pipeline stages. Two chains share `read`:
///   full-decode chain  read -> decode -> crop_resize -> simple(decode=full)
///   crop-decode chain  read -> crop_decode -> resize -> simple(decode=crop)
/// `threeaug` replaces the flip of `simple` with the 3-Aug policy.
enum class Stage { Read, Decode, CropDecode, CropResize, Resize, Simple, ThreeAug };

std::string to_string(Stage s);
/// Throws ConfigError listing the allowed names.
Stage parse_stage(std::string_view name);
std::vector<std::string> stage_names();

struct BenchConfig {
  std::string data;
  Stage stage = Stage::Read;
  int batch = 256;
  int workers = 0;
  int warmup_batches = 2;
  std::uint64_t images = 0;  // measured images; 0 -> 10 batches
  int res = 224;
  std::uint64_t seed = 0;
  pipeline::DecodeMode decode = pipeline::DecodeMode::Crop;  // simple/threeaug only
  double scale_lo = 0.08;
  double scale_hi = 1.0;
  int repeats = 1;  // best of

  std::uint64_t measured_images() const noexcept {
    return images > 0 ? images : 10 * static_cast<std::uint64_t>(batch);
  }
  /// Throws ConfigError: batch < 1, warmup < 2, measured < 10 batches, ...
  void validate() const;
};

struct BenchReport {
  Stage stage = Stage::Read;
  pipeline::DecodeMode decode = pipeline::DecodeMode::Crop;
  double throughput = 0.0;  // images / second, best repeat
  double seconds = 0.0;     // wall time of the best repeat
  std::uint64_t images = 0;
  std::uint64_t dataset_size = 0;
  int workers = 0;
  int batch = 0;
  int res = 0;
  std::uint64_t seed = 0;
  jpeg::DecodeStats stats;  // summed over one measured pass
  std::uint64_t fallback_count = 0;
  std::string environment;

  std::string to_json() const;
};

BenchReport run_stage_bench(const BenchConfig& cfg);
BenchReport run_stage_bench(const container::ContainerHandle& data, const BenchConfig& cfg);

// ---------------------------------------------------------------- diff

/// Ordered collection of decoded images.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::size_t size() const = 0;
  virtual RgbImage load(std::size_t index) const = 0;
};

/// A directory is read as a class-folder tree in builder order; a file is
/// opened as a container. Throws IoError / FormatError.
std::unique_ptr<ImageSource> open_source(const std::filesystem::path& path);

struct DiffReport {
  std::vector<double> per_sample;  // MAE on the [0, 1] scale
  double mean = 0.0;
  double max = 0.0;

  std::string to_json(bool include_samples = false) const;
};

/// Brings each pair to a common geometry and measures MAE:
///  1. if the sizes differ, the larger image (by area, then width) is
///     bilinearly resized to the other's size;
///  2. if `size` > 0 both are centre-cropped to at most size x size.
/// Throws ConfigError when the sources hold different sample counts.
DiffReport diff_datasets(const ImageSource& a, const ImageSource& b, int size = 0, int workers = 0);

RgbImage center_crop(const RgbImage& img, int w, int h);
double mean_abs_error(const RgbImage& a, const RgbImage& b);  // same size required

// ---------------------------------------------------------------- sweep

struct SweepConfig {
  std::filesystem::path source;
  std::vector<int> resolutions{256, 500};
  std::vector<int> qualities{90, 95, 100};
  std::filesystem::path work_dir;  // containers are written here
  int workers = 0;
  std::uint64_t seed = 0;
  int batch = 64;
  std::uint64_t bench_images = 0;  // 0: max(dataset size, 10 batches)
  int repeats = 3;
  bool keep_containers = false;
};

struct SweepRow {
  int res = 0;
  int quality = 0;
  std::uint64_t bytes = 0;
  double build_seconds = 0.0;
  double throughput = 0.0;  // decode-stage images / second
  double mae = 0.0;         // vs the source images, [0, 1] scale
};

std::vector<SweepRow> compression_sweep(const SweepConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace essl::bench

#endif  // ESSL_BENCH_HPP_
