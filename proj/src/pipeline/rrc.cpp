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


#include <algorithm>
#include <cmath>
#include <string>

#include "essl/error.hpp"
#include "essl/pipeline.hpp"

namespace essl::pipeline {

void RrcConfig::validate() const {
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi && scale_hi <= 1.0)) {
    throw ConfigError("scale must satisfy 0 < lo <= hi <= 1");
  }
  if (!(ratio_lo > 0.0 && ratio_lo <= ratio_hi)) throw ConfigError("ratio must satisfy 0 < lo <= hi");
  if (out_size < 16) throw ConfigError("output size must be at least 16");
  if (max_attempts < 0) throw ConfigError("max_attempts must be non-negative");
}

// torchvision RandomResizedCrop.get_params, including its round-half-even
// and centre fallback.
RrcDraw sample_rrc_ex(SampleRng& rng, int src_w, int src_h, const RrcConfig& cfg) {
  if (src_w < 1 || src_h < 1) throw RangeError("source image must be at least 1x1");
  const double area = static_cast<double>(src_w) * src_h;
  const double log_lo = std::log(cfg.ratio_lo), log_hi = std::log(cfg.ratio_hi);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double target = area * rng.uniform(cfg.scale_lo, cfg.scale_hi);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::nearbyint(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::nearbyint(std::sqrt(target / aspect)));
    if (w > 0 && w <= src_w && h > 0 && h <= src_h) {
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(src_h - h + 1)));
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(src_w - w + 1)));
      return {CropRect{x, y, w, h}, false};
    }
  }
  const double in_ratio = static_cast<double>(src_w) / src_h;
  int w = src_w, h = src_h;
  if (in_ratio < cfg.ratio_lo) {
    h = static_cast<int>(std::nearbyint(w / cfg.ratio_lo));
  } else if (in_ratio > cfg.ratio_hi) {
    w = static_cast<int>(std::nearbyint(h * cfg.ratio_hi));
  }
  w = std::clamp(w, 1, src_w);
  h = std::clamp(h, 1, src_h);
  return {CropRect{(src_w - w) / 2, (src_h - h) / 2, w, h}, true};
}

}  // namespace essl::pipeline
