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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "corpus.hpp"
#include "essl/container.hpp"
#include "essl/error.hpp"
#include "essl/masking.hpp"
#include "essl/pipeline.hpp"
#include "stats.hpp"

namespace essl::pipeline {
namespace {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ helpers

RgbImage random_image(int w, int h, std::uint64_t seed) {
  RgbImage img(w, h);
  SampleRng r(seed, 0, 0);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(r.below(256));
  return img;
}

// Straight per-pixel evaluation of the documented resize formula.
RgbImage reference_resize(const RgbImage& src, int ow, int oh) {
  auto tap = [](int o, int in, int out, int& i0, int& i1, std::int64_t& w1) {
    std::int64_t num = (2 * std::int64_t{o} + 1) * in - out;  // units of 1 / (2 out)
    if (num < 0) num = 0;
    i0 = static_cast<int>(num / (2 * out));
    w1 = ((num % (2 * out)) * 2048 + out) / (2 * out);
    if (w1 == 2048) {
      ++i0;
      w1 = 0;
    }
    if (i0 >= in - 1) {
      i0 = in - 1;
      w1 = 0;
    }
    i1 = std::min(i0 + 1, in - 1);
  };
  RgbImage out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      int x0, x1, y0, y1;
      std::int64_t wx, wy;
      tap(x, src.width(), ow, x0, x1, wx);
      tap(y, src.height(), oh, y0, y1, wy);
      for (int c = 0; c < 3; ++c) {
        const std::int64_t p00 = src.row(y0)[x0 * 3 + c], p01 = src.row(y0)[x1 * 3 + c];
        const std::int64_t p10 = src.row(y1)[x0 * 3 + c], p11 = src.row(y1)[x1 * 3 + c];
        const std::int64_t v = p00 * (2048 - wx) * (2048 - wy) + p01 * wx * (2048 - wy) +
                               p10 * (2048 - wx) * wy + p11 * wx * wy;
        out.row(y)[x * 3 + c] = static_cast<std::uint8_t>((v + (1 << 21)) >> 22);
      }
    }
  }
  return out;
}

// Real-valued bilinear interpolation at half-pixel centres.
double exact_bilinear(const RgbImage& src, double sx, double sy, int c) {
  sx = std::clamp(sx, 0.0, src.width() - 1.0);
  sy = std::clamp(sy, 0.0, src.height() - 1.0);
  const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, src.width() - 1), y1 = std::min(y0 + 1, src.height() - 1);
  const double fx = sx - x0, fy = sy - y0;
  auto p = [&](int x, int y) { return static_cast<double>(src.row(y)[x * 3 + c]); };
  return (1 - fy) * ((1 - fx) * p(x0, y0) + fx * p(x1, y0)) + fy * ((1 - fx) * p(x0, y1) + fx * p(x1, y1));
}

bool is_gray(const RgbImage& img) {
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    if (px[i] != px[i + 1] || px[i] != px[i + 2]) return false;
  }
  return true;
}

fs::path small_corpus() {
  testsupport::CorpusSpec spec;
  spec.images = 50;
  return testsupport::ensure_corpus(spec);
}

fs::path small_container() { return testsupport::ensure_container(small_corpus(), 500, 95, "pipe"); }

// ------------------------------------------------------------------ RRC

TEST(Rrc, IdentityConfigOnSquare) {
  RrcConfig cfg{1.0, 1.0, 1.0, 1.0, 224, 10};
  for (int i = 0; i < 100; ++i) {
    SampleRng rng(1, 0, i);
    EXPECT_EQ(sample_rrc(rng, 300, 300, cfg), (CropRect{0, 0, 300, 300}));
  }
}

TEST(Rrc, AcceptedRectsRespectBounds) {
  RrcConfig cfg;
  for (int i = 0; i < 20000; ++i) {
    SampleRng rng(2, 0, i);
    const auto d = sample_rrc_ex(rng, 500, 375, cfg);
    ASSERT_TRUE(rect_fits(d.rect, 500, 375));
    if (d.fallback) continue;
    const double frac = static_cast<double>(d.rect.w) * d.rect.h / (500.0 * 375.0);
    // Each side is rounded to an integer: allow half a pixel per side.
    const double slack = (0.5 * (d.rect.w + d.rect.h) + 0.25) / (500.0 * 375.0);
    EXPECT_GE(frac, cfg.scale_lo - slack);
    EXPECT_LE(frac, cfg.scale_hi + slack);
    const double aspect = static_cast<double>(d.rect.w) / d.rect.h;
    EXPECT_GE(aspect, cfg.ratio_lo * (d.rect.w - 0.5) / (d.rect.w + 0.0) * (d.rect.h / (d.rect.h + 0.5)));
    EXPECT_LE(aspect, cfg.ratio_hi * (d.rect.w + 0.5) / d.rect.w * (d.rect.h / (d.rect.h - 0.5)));
  }
}

// E[a | accepted] for one attempt on a W x H image, by midpoint quadrature
// over (a, ln alpha) with the continuous acceptance region a*A*alpha <= W^2,
// a*A/alpha <= H^2.
double conditional_area_mean(double W, double H, const RrcConfig& cfg) {
  const int n = 2000;
  const double A = W * H, l0 = std::log(cfg.ratio_lo), l1 = std::log(cfg.ratio_hi);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    const double a = cfg.scale_lo + (cfg.scale_hi - cfg.scale_lo) * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double alpha = std::exp(l0 + (l1 - l0) * (j + 0.5) / n);
      if (a * A * alpha <= W * W && a * A / alpha <= H * H) {
        num += a;
        den += 1;
      }
    }
  }
  return num / den;
}

TEST(Rrc, AreaDistributionOn500x375) {
  RrcConfig cfg;
  const int n = 100000;
  double realized = 0, proposal = 0;
  int fallbacks = 0;
  double lo = 1;
  for (int i = 0; i < n; ++i) {
    SampleRng rng(3, 0, i);
    const auto d = sample_rrc_ex(rng, 500, 375, cfg);
    const double frac = static_cast<double>(d.rect.w) * d.rect.h / (500.0 * 375.0);
    realized += frac;
    lo = std::min(lo, frac);
    fallbacks += d.fallback;
    SampleRng p(3, 0, i);
    proposal += p.uniform(cfg.scale_lo, cfg.scale_hi);  // first proposal of the same stream
  }
  EXPECT_GE(lo, 0.08 - 0.002);
  // Proposals are U[0.08, 1]: mean 0.54.
  EXPECT_NEAR(proposal / n, 0.54, 0.01);
  // Accepted crops are proposals conditioned on fitting the 4:3 frame,
  // which removes large off-aspect areas; the realized mean is ~0.43.
  EXPECT_NEAR(realized / n, conditional_area_mean(500, 375, cfg), 0.01);
  EXPECT_LT(fallbacks, n / 1000);
}

TEST(Rrc, DegenerateImageUsesClampedFallback) {
  RrcConfig cfg;
  int fallbacks = 0;
  for (int i = 0; i < 1000; ++i) {
    SampleRng rng(4, 0, i);
    const auto d = sample_rrc_ex(rng, 20, 500, cfg);
    ASSERT_TRUE(rect_fits(d.rect, 20, 500));
    if (d.fallback) {
      ++fallbacks;
      EXPECT_EQ(d.rect, (CropRect{0, 236, 20, 27}));  // 20 / round(20 / 0.75)
      EXPECT_NEAR(static_cast<double>(d.rect.w) / d.rect.h, cfg.ratio_lo, 0.02);
    }
  }
  EXPECT_GT(fallbacks, 900);
}

TEST(Rrc, TinyImages) {
  RrcConfig cfg;
  for (int i = 0; i < 100; ++i) {
    SampleRng rng(5, 0, i);
    EXPECT_EQ(sample_rrc(rng, 1, 1, cfg), (CropRect{0, 0, 1, 1}));
  }
  SampleRng rng(5, 1, 1);
  EXPECT_THROW(sample_rrc(rng, 0, 5, cfg), RangeError);
}

// ------------------------------------------------------------------ resize

TEST(Resize, SameSizeIsIdentity) {
  const RgbImage img = random_image(224, 224, 1);
  EXPECT_EQ(resize_bilinear(img, 224), img);
}

TEST(Resize, TwoByTwoUpscale) {
  RgbImage img(2, 2);
  for (int y = 0; y < 2; ++y) {
    for (int c = 0; c < 3; ++c) {
      img.row(y)[c] = 0;
      img.row(y)[3 + c] = 255;
    }
  }
  const RgbImage out = resize_bilinear(img, 4);
  for (int y = 0; y < 4; ++y) {
    EXPECT_EQ(std::vector<std::uint8_t>(out.row(y), out.row(y) + 12),
              std::vector<std::uint8_t>(out.row(0), out.row(0) + 12));
    for (int x = 1; x < 4; ++x) EXPECT_GE(out.row(y)[x * 3], out.row(y)[(x - 1) * 3]);
  }
  EXPECT_EQ(out.row(0)[0], 0);
  EXPECT_EQ(out.row(0)[9], 255);
  EXPECT_EQ(out.row(0)[3], 64);   // 0.25 * 255
  EXPECT_EQ(out.row(0)[6], 191);  // 0.75 * 255
}

TEST(Resize, MatchesReferenceBitForBit) {
  const RgbImage region = random_image(37, 61, 2);
  EXPECT_EQ(resize_bilinear(region, 224), reference_resize(region, 224, 224));
  SampleRng rng(6, 0, 0);
  for (int t = 0; t < 40; ++t) {
    const int w = 1 + static_cast<int>(rng.below(300)), h = 1 + static_cast<int>(rng.below(300));
    const int ow = 1 + static_cast<int>(rng.below(300)), oh = 1 + static_cast<int>(rng.below(300));
    const RgbImage img = random_image(w, h, 100 + t);
    ASSERT_EQ(resize_bilinear(img, ow, oh), reference_resize(img, ow, oh)) << w << "x" << h << "->" << ow << "x" << oh;
  }
}

TEST(Resize, WithinOneOfExactBilinear) {
  const RgbImage img = random_image(83, 47, 3);
  for (auto [ow, oh] : {std::pair{224, 224}, {40, 30}, {83, 200}}) {
    const RgbImage out = resize_bilinear(img, ow, oh);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const double sx = (x + 0.5) * 83 / ow - 0.5, sy = (y + 0.5) * 47 / oh - 0.5;
        for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.row(y)[x * 3 + c], exact_bilinear(img, sx, sy, c), 1.0);
      }
    }
  }
}

// ------------------------------------------------------------------ augment

TEST(Augment, GrayscaleFixedPoint) {
  RgbImage img = random_image(30, 20, 4);
  grayscale(img);
  ASSERT_TRUE(is_gray(img));
  RgbImage again = img;
  grayscale(again);
  EXPECT_EQ(again, img);
}

TEST(Augment, GrayscaleWeights) {
  RgbImage img(1, 1);
  img.pixels()[0] = 255;
  grayscale(img);
  EXPECT_EQ(img.pixels()[0], 76);  // (299 * 255 + 500) / 1000
}

TEST(Augment, SolarizeThreshold) {
  RgbImage zeros(8, 8);
  RgbImage copy = zeros;
  solarize(copy);
  EXPECT_EQ(copy, zeros);
  RgbImage full(8, 8);
  for (auto& v : full.pixels()) v = 255;
  solarize(full);
  for (auto v : full.pixels()) EXPECT_EQ(v, 0);
  RgbImage edge(2, 1);
  edge.pixels()[0] = 127;
  edge.pixels()[1] = 128;
  solarize(edge);
  EXPECT_EQ(edge.pixels()[0], 127);
  EXPECT_EQ(edge.pixels()[1], 127);
}

TEST(Augment, FlipTwiceIsIdentity) {
  const RgbImage img = random_image(13, 7, 5);
  RgbImage f = img;
  hflip(f);
  EXPECT_NE(f, img);
  EXPECT_EQ(f.row(3)[0], img.row(3)[12 * 3]);
  hflip(f);
  EXPECT_EQ(f, img);
}

TEST(Augment, BlurMatchesReflectReference) {
  const RgbImage img = random_image(19, 11, 6);
  for (double sigma : {0.1, 0.7, 2.0}) {
    RgbImage out = img;
    gaussian_blur(out, sigma);
    const int r = static_cast<int>(std::ceil(3 * sigma));
    auto refl = [](int i, int n) {
      while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
      return i;
    };
    double norm = 0;
    for (int i = -r; i <= r; ++i) norm += std::exp(-0.5 * i * i / (sigma * sigma));
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 19; ++x) {
        for (int c = 0; c < 3; ++c) {
          double v = 0;
          for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
              const double k = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma)) / (norm * norm);
              v += k * img.row(refl(y + dy, 11))[refl(x + dx, 19) * 3 + c];
            }
          }
          ASSERT_NEAR(out.row(y)[x * 3 + c], v, 0.51) << sigma;
        }
      }
    }
  }
}

TEST(Augment, BlurKeepsFlatImagesFlat) {
  RgbImage img(5, 3);
  for (auto& v : img.pixels()) v = 77;
  gaussian_blur(img, 2.0);
  for (auto v : img.pixels()) EXPECT_EQ(v, 77);
}

TEST(Augment, SimpleOnlyFlips) {
  const RgbImage img = random_image(16, 16, 7);
  int flips = 0;
  for (int i = 0; i < 2000; ++i) {
    SampleRng rng(1, 0, i);
    RgbImage out = img;
    AugTrace t;
    apply_aug(rng, out, AugLevel::Simple, &t);
    EXPECT_EQ(t.three_op, -1);
    RgbImage expect = img;
    if (t.flipped) hflip(expect);
    ASSERT_EQ(out, expect);
    flips += t.flipped;
  }
  EXPECT_NEAR(flips, 1000, 100);
}

TEST(Augment, ThreeAugChoosesUniformly) {
  std::vector<std::uint64_t> counts(3, 0);
  RgbImage tiny(2, 2);
  for (int i = 0; i < 10000; ++i) {
    SampleRng rng(8, 0, i, SampleRng::kAugment);
    RgbImage img = tiny;
    AugTrace t;
    apply_aug(rng, img, AugLevel::ThreeAug, &t);
    ASSERT_GE(t.three_op, 0);
    ++counts[static_cast<std::size_t>(t.three_op)];
    if (t.three_op == 2) {
      EXPECT_GE(t.blur_sigma, 0.1);
      EXPECT_LE(t.blur_sigma, 2.0);
    }
  }
  for (auto c : counts) EXPECT_NEAR(static_cast<double>(c), 3333.0, 150.0);
  EXPECT_GT(testsupport::chi_square_p(testsupport::chi_square(counts, 10000.0 / 3), 2), 0.001);
}

TEST(Augment, ThreeAugReproducesChosenOp) {
  const RgbImage img = random_image(24, 24, 9);
  for (int i = 0; i < 60; ++i) {
    SampleRng rng(9, 0, i);
    RgbImage out = img;
    AugTrace t;
    apply_aug(rng, out, AugLevel::ThreeAug, &t);
    RgbImage expect = img;
    if (t.flipped) hflip(expect);
    if (t.three_op == 0) grayscale(expect);
    if (t.three_op == 1) solarize(expect);
    if (t.three_op == 2) gaussian_blur(expect, t.blur_sigma);
    ASSERT_EQ(out, expect);
  }
}

TEST(Augment, ThreeAugPlusJitterFactors) {
  const RgbImage img = random_image(24, 24, 10);
  for (int i = 0; i < 200; ++i) {
    SampleRng rng(10, 0, i);
    RgbImage out = img;
    AugTrace t;
    apply_aug(rng, out, AugLevel::ThreeAugPlus, &t);
    for (double f : t.jitter) {
      EXPECT_GE(f, 0.7);
      EXPECT_LE(f, 1.3);
    }
    RgbImage expect = img;
    if (t.flipped) hflip(expect);
    if (t.three_op == 0) grayscale(expect);
    if (t.three_op == 1) solarize(expect);
    if (t.three_op == 2) gaussian_blur(expect, t.blur_sigma);
    adjust_brightness(expect, t.jitter[0]);
    adjust_contrast(expect, t.jitter[1]);
    adjust_saturation(expect, t.jitter[2]);
    ASSERT_EQ(out, expect);
  }
}

TEST(Augment, JitterNeutralFactorsAndGrayInvariance) {
  const RgbImage img = random_image(10, 10, 11);
  RgbImage a = img;
  adjust_brightness(a, 1.0);
  adjust_saturation(a, 1.0);
  EXPECT_EQ(a, img);
  RgbImage g = img;
  grayscale(g);
  RgbImage s = g;
  adjust_saturation(s, 1.3);
  for (std::size_t i = 0; i < g.pixels().size(); ++i) EXPECT_NEAR(s.pixels()[i], g.pixels()[i], 1);
}

// ------------------------------------------------------------------ normalize

TEST(Normalize, InvertibleWithinTolerance) {
  const RgbImage img = random_image(32, 17, 12);
  std::vector<float> planar(3 * 32 * 17), back(3 * 32 * 17);
  normalize(img, planar.data());
  denormalize(planar.data(), 32, 17, back.data());
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 32 * 17; ++i) {
      ASSERT_NEAR(back[c * 32 * 17 + i], img.pixels()[i * 3 + c] / 255.0, 1e-6);
      ASSERT_TRUE(std::isfinite(planar[c * 32 * 17 + i]));
    }
  }
  EXPECT_NEAR(planar[0], (img.pixels()[0] / 255.0 - 0.485) / 0.229, 1e-5);
}

// ------------------------------------------------------------------ config

TEST(LoaderConfig, ParsesAllKeys) {
  const auto cfg = parse_loader_config(R"({"data": "x.essl", "batch_size": 32, "workers": 3, "seed": 9,
      "res": 192, "scale": [0.2, 1.0], "ratio": [0.5, 2.0], "aug": "3aug+", "mask_ratio": 0.75,
      "patch_size": 16, "decode": "full", "keep_u8": true})");
  EXPECT_EQ(cfg.batch_size, 32);
  EXPECT_EQ(cfg.workers, 3);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.res, 192);
  EXPECT_EQ(cfg.scale_lo, 0.2);
  EXPECT_EQ(cfg.ratio_hi, 2.0);
  EXPECT_EQ(cfg.aug, AugLevel::ThreeAugPlus);
  EXPECT_EQ(cfg.decode, DecodeMode::Full);
  EXPECT_TRUE(cfg.keep_u8);
  const auto again = parse_loader_config(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(LoaderConfig, ErrorsNameFields) {
  auto message = [](const char* text) {
    try {
      parse_loader_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"data": "x", "res": 200, "mask_ratio": 0.75})").find("mask_ratio/res"), std::string::npos);
  EXPECT_NE(message(R"({"data": "x", "batch_size": "big"})").find("batch_size"), std::string::npos);
  EXPECT_NE(message(R"({"data": "x", "bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(message(R"({"res": 224})").find("data"), std::string::npos);
  EXPECT_NE(message(R"({"data": "x", "scale": [0.5]})").find("scale"), std::string::npos);
  EXPECT_NE(message(R"({"data": "x", "aug": "randaug"})").find("randaug"), std::string::npos);
  EXPECT_NE(message(R"({"data": "x", "scheme": "nope"})").find("nope"), std::string::npos);
}

TEST(LoaderConfig, SchemeDrivesEpochParams) {
  const auto cfg = parse_loader_config(R"({"data": "x", "scheme": "pt_s4", "total_epochs": 10})");
  EXPECT_EQ(epoch_params(cfg, 0).res, 160);
  EXPECT_EQ(epoch_params(cfg, 3).res, 192);
  EXPECT_EQ(epoch_params(cfg, 9).res, 224);
  EXPECT_EQ(epoch_params(cfg, 9).mask_ratio, 0.85);
  EXPECT_NEAR(epoch_params(cfg, 0).rrc.scale_lo, 0.2, 1e-12);
  const auto ft = parse_loader_config(R"({"data": "x", "scheme": "ft_s3"})");
  EXPECT_NEAR(epoch_params(ft, 0).rrc.scale_hi, 0.68 * 0.68, 1e-12);
  EXPECT_EQ(epoch_params(ft, 60).aug, AugLevel::ThreeAugPlus);
  EXPECT_THROW(epoch_params(ft, 100), RangeError);
}

// ------------------------------------------------------------------ loader

LoaderConfig base_config(const fs::path& data) {
  LoaderConfig cfg;
  cfg.data = data.string();
  cfg.batch_size = 8;
  cfg.workers = 1;
  cfg.seed = 3;
  cfg.res = 64;
  cfg.aug = AugLevel::ThreeAugPlus;
  cfg.mask_ratio = 0.75;
  cfg.keep_u8 = true;
  return cfg;
}

std::vector<ImageBatch> whole_epoch(Loader& loader) {
  std::vector<ImageBatch> out;
  while (auto b = loader.next()) out.push_back(std::move(*b));
  return out;
}

TEST(Loader, BatchSizes) {
  const auto items = container::scan_source(small_corpus());
  const fs::path out = fs::path(testing::TempDir()) / "ten.essl";
  container::BuildSpec spec;
  spec.max_resolution = 128;
  container::build_container(std::vector(items.begin(), items.begin() + 10), spec, out);
  auto cfg = base_config(out);
  cfg.batch_size = 4;
  Loader loader(cfg);
  EXPECT_EQ(loader.batches_per_epoch(), 3u);
  const auto batches = whole_epoch(loader);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[1].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
  EXPECT_EQ(batches[2].pixels.size(), 2u * 3 * 64 * 64);
  EXPECT_EQ(batches[2].masks.size(), 2u * 12);  // 0.75 * 16 tokens
  ImageBatch extra;
  EXPECT_FALSE(loader.next(extra));
}

TEST(Loader, PermutationPerEpoch) {
  auto cfg = base_config(small_container());
  Loader loader(cfg);
  std::vector<std::vector<std::uint64_t>> orders;
  for (int e = 0; e < 3; ++e) {
    loader.set_epoch(e);
    std::vector<std::uint64_t> idx;
    for (const auto& b : whole_epoch(loader)) idx.insert(idx.end(), b.indices.begin(), b.indices.end());
    std::vector<std::uint64_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint64_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], i);
    orders.push_back(idx);
  }
  EXPECT_NE(orders[0], orders[1]);
  EXPECT_NE(orders[1], orders[2]);
}

TEST(Loader, WorkerCountInvariance) {
  auto cfg = base_config(small_container());
  Loader one(cfg);
  cfg.workers = 8;
  Loader eight(cfg);
  for (int e = 0; e < 2; ++e) {
    one.set_epoch(e);
    eight.set_epoch(e);
    const auto a = whole_epoch(one), b = whole_epoch(eight);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].pixels, b[i].pixels);
      EXPECT_EQ(a[i].u8, b[i].u8);
      EXPECT_EQ(a[i].labels, b[i].labels);
      EXPECT_EQ(a[i].masks, b[i].masks);
      EXPECT_EQ(a[i].indices, b[i].indices);
    }
  }
}

TEST(Loader, EndToEndMatchesReferenceComposition) {
  const auto data = container::Container::open(small_container());
  auto cfg = base_config(small_container());
  Loader loader(data, cfg);
  ImageBatch batch;
  ASSERT_TRUE(loader.next(batch));
  const EpochParams params = epoch_params(cfg, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto idx = batch.indices[i];
    const auto view = data->read(idx);
    const SampleRng base(cfg.seed, 0, idx);
    SampleRng crop_rng = base.fork(SampleRng::kCrop);
    const CropRect rect = sample_rrc(crop_rng, view.width, view.height, params.rrc);
    RgbImage img = reference_resize(crop(jpeg::decode_full(view.jpeg).image, rect), 64, 64);
    SampleRng aug_rng = base.fork(SampleRng::kAugment);
    apply_aug(aug_rng, img, AugLevel::ThreeAugPlus);
    EXPECT_TRUE(std::equal(img.pixels().begin(), img.pixels().end(), batch.u8.begin() + i * 64 * 64 * 3));
    std::vector<float> planar(3 * 64 * 64);
    normalize(img, planar.data());
    EXPECT_TRUE(std::equal(planar.begin(), planar.end(), batch.pixels.begin() + i * 3 * 64 * 64));
    EXPECT_EQ(batch.labels[i], view.label);
    SampleRng mask_rng = base.fork(SampleRng::kMask);
    const auto mask = masking::sample_mask(mask_rng, {64, 16, 0.75});
    EXPECT_TRUE(std::equal(mask.begin(), mask.end(), batch.masks.begin() + i * batch.mask_k));
  }
}

TEST(Loader, CropAndFullDecodeAgree) {
  auto cfg = base_config(small_container());
  Loader crop_loader(cfg);
  cfg.decode = DecodeMode::Full;
  Loader full_loader(cfg);
  const auto a = whole_epoch(crop_loader), b = whole_epoch(full_loader);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].u8, b[i].u8);
  EXPECT_LT(a[0].stats.mcus_reconstructed, b[0].stats.mcus_reconstructed);
}

TEST(Loader, ScheduleChangesResolutionAndMask) {
  auto cfg = base_config(small_container());
  cfg.scheme = schedule::builtin_scheme("pt_s1");
  cfg.total_epochs = 10;
  Loader loader(cfg);
  auto first = loader.next();
  ASSERT_TRUE(first);
  EXPECT_EQ(first->res, 160);
  EXPECT_EQ(first->mask_k, 50);
  loader.set_epoch(9);
  auto last = loader.next();
  EXPECT_EQ(last->res, 224);
  EXPECT_EQ(last->mask_k, 147);
}

TEST(Loader, CorruptionCarriesIndex) {
  const fs::path src = small_container();
  const fs::path bad = fs::path(testing::TempDir()) / "corrupt.essl";
  fs::copy_file(src, bad, fs::copy_options::overwrite_existing);
  const auto rec = container::Container::open(src)->record(17);
  {
    std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(rec.payload_offset + rec.payload_length / 2));
    f.put('\x5a');
    f.put('\xa5');
  }
  auto cfg = base_config(bad);
  cfg.workers = 4;
  Loader loader(cfg);
  try {
    while (loader.next()) {
    }
    FAIL() << "corruption not reported";
  } catch (const CorruptionError& e) {
    EXPECT_EQ(e.index(), 17);
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
  }
}

}  // namespace
}  // namespace essl::pipeline
