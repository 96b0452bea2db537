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


#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <system_error>

#include "essl/container.hpp"
#include "essl/jpeg.hpp"
#include "essl/pipeline.hpp"
#include "essl/rng.hpp"
#include "essl/thread_pool.hpp"

namespace essl::testsupport {
namespace fs = std::filesystem;

fs::path data_dir() { return ESSL_TEST_DATA_DIR; }
fs::path corpus_root() { return ESSL_CORPUS_ROOT; }

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

const std::vector<RgbImage>& seed_images() {
  static const std::vector<RgbImage> seeds = [] {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(data_dir() / "seeds")) {
      if (e.path().extension() == ".jpg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RgbImage> out;
    for (const auto& f : files) out.push_back(jpeg::decode_full(read_bytes(f)).image);
    return out;
  }();
  return seeds;
}

RgbImage corpus_image(const CorpusSpec& spec, std::uint64_t i) {
  const auto& seeds = seed_images();
  SampleRng rng(spec.seed, 0, i, SampleRng::kUser);
  const RgbImage& src = seeds[rng.below(seeds.size())];
  const double area = rng.uniform(0.25, 1.0) * src.width() * src.height();
  const double aspect = std::exp(rng.uniform(std::log(3.0 / 4.0), std::log(4.0 / 3.0)));
  const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, src.width());
  const int h = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, src.height());
  const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.width() - w + 1)));
  const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.height() - h + 1)));
  RgbImage img = crop(src, CropRect{x, y, w, h});
  if (rng.bernoulli(0.5)) pipeline::hflip(img);
  const int target = spec.min_side + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_side - spec.min_side + 1)));
  const auto [tw, th] = container::fit_within(img.width(), img.height(), target);
  if (tw != img.width() || th != img.height()) img = pipeline::resize_bilinear(img, tw, th);
  return img;
}

namespace {

std::string corpus_name(const CorpusSpec& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "corpus_n%d_c%d_s%llu_%s_q%d_%d-%d", s.images, s.classes,
                static_cast<unsigned long long>(s.seed), s.format == CorpusFormat::Jpeg ? "jpg" : "ppm",
                s.quality, s.min_side, s.max_side);
  return buf;
}

std::mutex& gen_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

fs::path ensure_corpus(const CorpusSpec& spec) { return ensure_corpus(spec, corpus_root()); }

fs::path ensure_corpus(const CorpusSpec& spec, const fs::path& root) {
  std::lock_guard lock(gen_mutex());
  const fs::path dir = root / corpus_name(spec);
  const fs::path stamp = root / (corpus_name(spec) + ".done");
  if (fs::exists(stamp)) return dir;
  fs::remove_all(dir);
  for (int c = 0; c < spec.classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "class_%02d", c);
    fs::create_directories(dir / name);
  }
  ThreadPool pool(0);
  pool.parallel_for(static_cast<std::size_t>(spec.images), [&](std::size_t i) {
    const RgbImage img = corpus_image(spec, i);
    char name[64];
    std::snprintf(name, sizeof name, "class_%02d/img_%05zu.%s", static_cast<int>(i % spec.classes), i,
                  spec.format == CorpusFormat::Jpeg ? "jpg" : "ppm");
    if (spec.format == CorpusFormat::Ppm) {
      container::save_ppm(img, dir / name);
    } else {
      const auto bytes = jpeg::encode(img, spec.quality);
      std::ofstream f(dir / name, std::ios::binary);
      f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
  });
  std::ofstream(stamp) << "ok\n";
  return dir;
}

fs::path ensure_container(const fs::path& corpus, int max_res, int quality, const std::string& tag) {
  std::lock_guard lock(gen_mutex());
  const fs::path out = corpus.parent_path() / (corpus.filename().string() + "_" + tag + "_r" +
                                               std::to_string(max_res) + "_q" + std::to_string(quality) + ".essl");
  const fs::path stamp = out.string() + ".done";
  if (fs::exists(stamp) && fs::exists(out)) return out;
  container::BuildSpec spec;
  spec.source = corpus;
  spec.max_resolution = max_res;
  spec.quality = quality;
  spec.seed = 7;
  container::build_container(spec, out);
  std::ofstream(stamp) << "ok\n";
  return out;
}

RgbImage synthetic_image(int w, int h, std::uint64_t seed) {
  SampleRng rng(seed, 1, 2, 3);
  const double fx = rng.uniform(0.01, 0.08), fy = rng.uniform(0.01, 0.08);
  const double px = rng.uniform(0, 6.28), py = rng.uniform(0, 6.28);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    std::uint8_t* r = img.row(y);
    for (int x = 0; x < w; ++x) {
      const double base = 128 + 80 * std::sin(fx * x + px) * std::cos(fy * y + py);
      const int noise = static_cast<int>(rng.below(21)) - 10;
      r[x * 3 + 0] = static_cast<std::uint8_t>(std::clamp(base + noise, 0.0, 255.0));
      r[x * 3 + 1] = static_cast<std::uint8_t>(std::clamp(255 - base + noise, 0.0, 255.0));
      r[x * 3 + 2] = static_cast<std::uint8_t>(std::clamp(0.5 * base + 40 + noise, 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace essl::testsupport
