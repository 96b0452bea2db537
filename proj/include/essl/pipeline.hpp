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


#ifndef ESSL_PIPELINE_HPP_
#define ESSL_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "essl/aug_level.hpp"
#include "essl/container.hpp"
#include "essl/image.hpp"
#include "essl/jpeg.hpp"
#include "essl/rng.hpp"
#include "essl/schedule.hpp"
#include "essl/thread_pool.hpp"

namespace essl::pipeline {

// ---------------------------------------------------------------- crop

/// RandomResizedCrop distribution: area fraction ~ U[scale_lo, scale_hi],
/// log aspect ~ U[ln ratio_lo, ln ratio_hi].
struct RrcConfig {
  double scale_lo = 0.08;
  double scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0;
  double ratio_hi = 4.0 / 3.0;
  int out_size = 224;
  int max_attempts = 10;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct RrcDraw {
  CropRect rect;
  bool fallback = false;  // no attempt fitted; centred rect returned
};

RrcDraw sample_rrc_ex(SampleRng& rng, int src_w, int src_h, const RrcConfig& cfg);
inline CropRect sample_rrc(SampleRng& rng, int src_w, int src_h, const RrcConfig& cfg) {
  return sample_rrc_ex(rng, src_w, src_h, cfg).rect;
}

// ---------------------------------------------------------------- resize

/// Bilinear resample with half-pixel centres and edge clamping. Weights are
/// 11-bit fixed point; the result is exactly
///   (sum_ij wx_i * wy_j * p_ij + 2^21) >> 22
/// so any evaluation order gives the same bytes.
RgbImage resize_bilinear(const RgbImage& src, int out_w, int out_h);
inline RgbImage resize_bilinear(const RgbImage& src, int out) { return resize_bilinear(src, out, out); }

/// Source taps and weights for one output coordinate (shared with tests).
struct BilinearTap {
  int i0 = 0;
  int i1 = 0;
  int w1 = 0;  // weight of i1 in 1/2048 units; i0 gets 2048 - w1
};
BilinearTap bilinear_tap(int out_index, int in_size, int out_size);

// ---------------------------------------------------------------- augment

inline constexpr int kSolarizeThreshold = 128;
inline constexpr double kBlurSigmaLo = 0.1;
inline constexpr double kBlurSigmaHi = 2.0;
inline constexpr double kJitter = 0.3;

void hflip(RgbImage& img);
/// BT.601 luma (299 R + 587 G + 114 B + 500) / 1000 written to all channels.
void grayscale(RgbImage& img);
/// Inverts every channel value >= threshold.
void solarize(RgbImage& img, int threshold = kSolarizeThreshold);
/// Separable gaussian, radius ceil(3 sigma), reflect padding.
void gaussian_blur(RgbImage& img, double sigma);
void adjust_brightness(RgbImage& img, double factor);
void adjust_contrast(RgbImage& img, double factor);
void adjust_saturation(RgbImage& img, double factor);

/// What apply_aug decided; filled when a trace pointer is passed.
struct AugTrace {
  bool flipped = false;
  int three_op = -1;  // -1 none, 0 grayscale, 1 solarize, 2 blur
  double blur_sigma = 0.0;
  std::array<double, 3> jitter = {1.0, 1.0, 1.0};  // brightness, contrast, saturation
};

void apply_aug(SampleRng& rng, RgbImage& img, AugLevel level, AugTrace* trace = nullptr);

// ---------------------------------------------------------------- normalize

inline constexpr std::array<float, 3> kMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kStd = {0.229f, 0.224f, 0.225f};

/// Interleaved 8-bit -> planar float [3, h, w], (v / 255 - mean) / std.
void normalize(const RgbImage& img, float* out);
/// Inverse of normalize, returned on the [0, 1] scale (planar).
void denormalize(const float* in, int width, int height, float* out);

// ---------------------------------------------------------------- loader

enum class DecodeMode { Crop, Full };

/// JSON-serialisable loader configuration. Keys:
///   data, batch_size, workers, seed, res, scale [lo, hi], ratio [lo, hi],
///   aug, mask_ratio; optional patch_size, decode ("crop" | "full"),
///   scheme (built-in name or inline scheme object), total_epochs, keep_u8.
struct LoaderConfig {
  std::string data;
  int batch_size = 256;
  int workers = 0;  // <= 0: hardware concurrency
  std::uint64_t seed = 0;
  int res = 224;
  double scale_lo = 0.08;
  double scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0;
  double ratio_hi = 4.0 / 3.0;
  AugLevel aug = AugLevel::Simple;
  double mask_ratio = 0.0;
  int patch_size = 16;
  DecodeMode decode = DecodeMode::Crop;
  std::optional<schedule::ScheduleScheme> scheme;
  int total_epochs = 0;  // 0: the scheme's own default
  bool keep_u8 = false;

  /// Throws ConfigError naming the offending field(s).
  void validate() const;
};

LoaderConfig parse_loader_config(std::string_view json_text);
std::string to_json(const LoaderConfig& cfg);

/// Per-epoch knobs after applying an optional schedule.
struct EpochParams {
  int res = 224;
  double mask_ratio = 0.0;
  AugLevel aug = AugLevel::Simple;
  RrcConfig rrc;
};
EpochParams epoch_params(const LoaderConfig& cfg, int epoch);

/// One fully processed sample.
struct SampleResult {
  RgbImage image;  // res x res, augmented
  std::uint32_t label = 0;
  std::vector<std::int32_t> mask;
  jpeg::DecodeStats stats;
  CropRect rect;
};

/// The per-sample pipeline: read -> RRC draw -> (crop) decode -> resize ->
/// augment -> mask. Depends only on (container bytes, params, seed, epoch,
/// index).
SampleResult process_sample(const container::Container& data, std::uint64_t index,
                            const EpochParams& params, std::uint64_t seed, int epoch,
                            DecodeMode mode = DecodeMode::Crop, int patch_size = 16);

/// Seeded per-epoch visiting order (Fisher-Yates).
std::vector<std::uint64_t> epoch_permutation(std::uint64_t n, std::uint64_t seed, int epoch);

struct ImageBatch {
  int epoch = 0;
  int res = 0;
  int mask_k = 0;  // masked tokens per sample
  std::vector<float> pixels;        // [B, 3, res, res]
  std::vector<std::uint8_t> u8;     // [B, res, res, 3] when keep_u8
  std::vector<std::uint32_t> labels;
  std::vector<std::uint64_t> indices;
  std::vector<std::int32_t> masks;  // [B, mask_k]
  jpeg::DecodeStats stats;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Deterministic parallel loader. Batch content is a pure function of
/// (container bytes, config minus `workers`, epoch).
class Loader {
 public:
  explicit Loader(const LoaderConfig& cfg);
  Loader(container::ContainerHandle data, const LoaderConfig& cfg);
  ~Loader();
  Loader(const Loader&) = delete;
  Loader& operator=(const Loader&) = delete;

  const LoaderConfig& config() const noexcept { return cfg_; }
  const container::Container& data() const noexcept { return *data_; }
  std::uint64_t size() const noexcept { return data_->size(); }
  std::size_t batches_per_epoch() const noexcept;

  /// Restarts iteration at batch 0 of `epoch`.
  void set_epoch(int epoch);
  int epoch() const noexcept { return epoch_; }
  std::size_t batch_index() const noexcept { return next_batch_; }

  /// Fills `out` with the next batch; false at end of epoch (out untouched).
  bool next(ImageBatch& out);
  std::optional<ImageBatch> next();

  /// Batch `b` of the current epoch without changing the cursor.
  void batch_at(std::size_t b, ImageBatch& out);

 private:
  LoaderConfig cfg_;
  container::ContainerHandle data_;
  std::unique_ptr<ThreadPool> pool_;
  int epoch_ = 0;
  EpochParams params_;
  std::vector<std::uint64_t> order_;
  std::size_t next_batch_ = 0;
};

}  // namespace essl::pipeline

#endif  // ESSL_PIPELINE_HPP_
