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
#include <vector>

#include "essl/pipeline.hpp"

namespace essl::pipeline {
namespace {

inline std::uint8_t clamp_u8(float v) {
  return static_cast<std::uint8_t>(std::clamp(v + 0.5f, 0.0f, 255.0f));
}

inline float luma(const std::uint8_t* p) { return 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]; }

// Mirror without repeating the edge sample: -1 -> 1, n -> n - 2.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

void hflip(RgbImage& img) {
  for (int y = 0; y < img.height(); ++y) {
    std::uint8_t* r = img.row(y);
    for (int a = 0, b = img.width() - 1; a < b; ++a, --b) {
      std::swap(r[a * 3 + 0], r[b * 3 + 0]);
      std::swap(r[a * 3 + 1], r[b * 3 + 1]);
      std::swap(r[a * 3 + 2], r[b * 3 + 2]);
    }
  }
}

void grayscale(RgbImage& img) {
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const auto g = static_cast<std::uint8_t>((299 * px[i] + 587 * px[i + 1] + 114 * px[i + 2] + 500) / 1000);
    px[i] = px[i + 1] = px[i + 2] = g;
  }
}

void solarize(RgbImage& img, int threshold) {
  for (auto& v : img.pixels()) {
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  }
}

void gaussian_blur(RgbImage& img, double sigma) {
  if (img.empty() || !(sigma > 0.0)) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += std::exp(-0.5 * (i * i) / (sigma * sigma));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] =
        static_cast<float>(std::exp(-0.5 * (i * i) / (sigma * sigma)) / sum);
  }
  const int w = img.width(), h = img.height();
  std::vector<float> tmp(static_cast<std::size_t>(w) * h * 3);
  std::vector<int> xs(static_cast<std::size_t>(w + 2 * radius));
  for (int i = 0; i < w + 2 * radius; ++i) xs[static_cast<std::size_t>(i)] = reflect(i - radius, w);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* s = img.row(y);
    float* d = tmp.data() + static_cast<std::size_t>(y) * w * 3;
    for (int x = 0; x < w; ++x) {
      float a0 = 0, a1 = 0, a2 = 0;
      for (int t = 0; t <= 2 * radius; ++t) {
        const std::uint8_t* p = s + xs[static_cast<std::size_t>(x + t)] * 3;
        const float kw = k[static_cast<std::size_t>(t)];
        a0 += kw * p[0];
        a1 += kw * p[1];
        a2 += kw * p[2];
      }
      d[x * 3 + 0] = a0;
      d[x * 3 + 1] = a1;
      d[x * 3 + 2] = a2;
    }
  }
  const std::size_t stride = static_cast<std::size_t>(w) * 3;
  std::vector<float> acc(stride);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (int t = -radius; t <= radius; ++t) {
      const float* s = tmp.data() + static_cast<std::size_t>(reflect(y + t, h)) * stride;
      const float kw = k[static_cast<std::size_t>(t + radius)];
      for (std::size_t i = 0; i < stride; ++i) acc[i] += kw * s[i];
    }
    std::uint8_t* d = img.row(y);
    for (std::size_t i = 0; i < stride; ++i) d[i] = clamp_u8(acc[i]);
  }
}

void adjust_brightness(RgbImage& img, double factor) {
  const auto f = static_cast<float>(factor);
  for (auto& v : img.pixels()) v = clamp_u8(f * v);
}

void adjust_contrast(RgbImage& img, double factor) {
  if (img.empty()) return;
  const auto px = img.pixels();
  double total = 0.0;
  for (std::size_t i = 0; i < px.size(); i += 3) total += luma(&px[i]);
  const auto mean = static_cast<float>(total / (px.size() / 3));
  const auto f = static_cast<float>(factor);
  for (auto& v : img.pixels()) v = clamp_u8(f * v + (1.0f - f) * mean);
}

void adjust_saturation(RgbImage& img, double factor) {
  const auto f = static_cast<float>(factor);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const float g = (1.0f - f) * luma(&px[i]);
    px[i] = clamp_u8(f * px[i] + g);
    px[i + 1] = clamp_u8(f * px[i + 1] + g);
    px[i + 2] = clamp_u8(f * px[i + 2] + g);
  }
}

void apply_aug(SampleRng& rng, RgbImage& img, AugLevel level, AugTrace* trace) {
  AugTrace t;
  t.flipped = rng.bernoulli(0.5);
  if (t.flipped) hflip(img);
  if (level != AugLevel::Simple) {
    t.three_op = static_cast<int>(rng.below(3));
    switch (t.three_op) {
      case 0: grayscale(img); break;
      case 1: solarize(img); break;
      default:
        t.blur_sigma = rng.uniform(kBlurSigmaLo, kBlurSigmaHi);
        gaussian_blur(img, t.blur_sigma);
        break;
    }
  }
  if (level == AugLevel::ThreeAugPlus) {
    for (auto& f : t.jitter) f = rng.uniform(1.0 - kJitter, 1.0 + kJitter);
    adjust_brightness(img, t.jitter[0]);
    adjust_contrast(img, t.jitter[1]);
    adjust_saturation(img, t.jitter[2]);
  }
  if (trace != nullptr) *trace = t;
}

void normalize(const RgbImage& img, float* out) {
  const std::size_t hw = static_cast<std::size_t>(img.width()) * img.height();
  const auto px = img.pixels();
  for (int c = 0; c < 3; ++c) {
    const float scale = 1.0f / (255.0f * kStd[c]);
    const float shift = kMean[c] / kStd[c];
    float* d = out + c * hw;
    for (std::size_t i = 0; i < hw; ++i) d[i] = px[i * 3 + c] * scale - shift;
  }
}

void denormalize(const float* in, int width, int height, float* out) {
  const std::size_t hw = static_cast<std::size_t>(width) * height;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < hw; ++i) out[c * hw + i] = in[c * hw + i] * kStd[c] + kMean[c];
  }
}

}  // namespace essl::pipeline
