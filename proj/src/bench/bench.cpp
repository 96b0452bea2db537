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


#include "essl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "essl/error.hpp"
#include "essl/thread_pool.hpp"

namespace essl::bench {
namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct StageInfo {
  Stage stage;
  const char* name;
};
constexpr StageInfo kStages[] = {
    {Stage::Read, "read"},         {Stage::Decode, "decode"}, {Stage::CropDecode, "crop_decode"},
    {Stage::CropResize, "crop_resize"}, {Stage::Resize, "resize"}, {Stage::Simple, "simple"},
    {Stage::ThreeAug, "threeaug"}};

const char* decode_name(pipeline::DecodeMode m) {
  return m == pipeline::DecodeMode::Crop ? "crop" : "full";
}

std::string environment_note(int workers) {
  std::ostringstream s;
  s << "workers=" << workers << " hardware_concurrency=" << std::thread::hardware_concurrency()
    << " compiler=" <<
#if defined(__clang__)
      "clang " << __clang_version__
#elif defined(__GNUC__)
      "gcc " << __VERSION__
#else
      "unknown"
#endif
#ifdef NDEBUG
    << " build=release";
#else
    << " build=debug";
#endif
  return s.str();
}

// Per-worker scratch reused across images.
struct Scratch {
  std::vector<float> planar;
};

// Runs the cumulative pipeline up to `stage` for one image.
jpeg::DecodeStats run_one(const container::Container& data, std::uint64_t index, std::uint64_t pass,
                          const BenchConfig& cfg, const pipeline::RrcConfig& rrc, Scratch& scratch,
                          std::atomic<std::uint64_t>& sink) {
  const container::SampleView view = data.read(index);
  if (cfg.stage == Stage::Read) {
    sink.fetch_add(view.jpeg.size(), std::memory_order_relaxed);
    return {};
  }
  if (cfg.stage == Stage::Decode) {
    auto d = jpeg::decode_full(view.jpeg);
    sink.fetch_add(d.image.pixels()[0], std::memory_order_relaxed);
    return d.stats;
  }
  const SampleRng base(cfg.seed, pass, index);
  SampleRng crop_rng = base.fork(SampleRng::kCrop);
  const CropRect rect = pipeline::sample_rrc(crop_rng, view.width, view.height, rrc);

  bool crop_chain = cfg.stage == Stage::CropDecode || cfg.stage == Stage::Resize;
  if (cfg.stage == Stage::Simple || cfg.stage == Stage::ThreeAug) {
    crop_chain = cfg.decode == pipeline::DecodeMode::Crop;
  }
  jpeg::Decoded d;
  if (crop_chain) {
    d = jpeg::decode_crop(view.jpeg, rect);
  } else {
    d = jpeg::decode_full(view.jpeg);
    d.image = crop(d.image, rect);
  }
  if (cfg.stage == Stage::CropDecode) {
    sink.fetch_add(d.image.pixels()[0], std::memory_order_relaxed);
    return d.stats;
  }
  RgbImage img = pipeline::resize_bilinear(d.image, cfg.res);
  if (cfg.stage == Stage::Simple || cfg.stage == Stage::ThreeAug) {
    SampleRng aug_rng = base.fork(SampleRng::kAugment);
    pipeline::apply_aug(aug_rng, img,
                        cfg.stage == Stage::Simple ? AugLevel::Simple : AugLevel::ThreeAug);
    scratch.planar.resize(static_cast<std::size_t>(3) * cfg.res * cfg.res);
    pipeline::normalize(img, scratch.planar.data());
    sink.fetch_add(scratch.planar[0] > 0.0f, std::memory_order_relaxed);
  } else {
    sink.fetch_add(img.pixels()[0], std::memory_order_relaxed);
  }
  return d.stats;
}

}  // namespace

std::string to_string(Stage s) {
  for (const auto& i : kStages) {
    if (i.stage == s) return i.name;
  }
  return "read";
}

std::vector<std::string> stage_names() {
  std::vector<std::string> out;
  for (const auto& i : kStages) out.emplace_back(i.name);
  return out;
}

Stage parse_stage(std::string_view name) {
  for (const auto& i : kStages) {
    if (name == i.name) return i.stage;
  }
  std::string allowed;
  for (const auto& n : stage_names()) allowed += (allowed.empty() ? "" : ", ") + n;
  throw ConfigError("unknown stage '" + std::string(name) + "' (allowed: " + allowed + ")");
}

void BenchConfig::validate() const {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (warmup_batches < 2) throw ConfigError("warmup must be at least 2 batches");
  if (measured_images() < 10 * static_cast<std::uint64_t>(batch)) {
    throw ConfigError("measured images must be at least 10 batches");
  }
  if (res < 16) throw ConfigError("res must be >= 16");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  pipeline::RrcConfig{scale_lo, scale_hi, 3.0 / 4.0, 4.0 / 3.0, res, 10}.validate();
}

std::string BenchReport::to_json() const {
  json j{{"stage", bench::to_string(stage)},
         {"decode", decode_name(decode)},
         {"throughput", throughput},
         {"seconds", seconds},
         {"images", images},
         {"dataset_size", dataset_size},
         {"workers", workers},
         {"batch", batch},
         {"res", res},
         {"seed", seed},
         {"stats",
          {{"mcus_entropy_decoded", stats.mcus_entropy_decoded},
           {"mcus_reconstructed", stats.mcus_reconstructed},
           {"mcus_total", stats.mcus_total},
           {"fallback_count", fallback_count}}},
         {"environment", environment}};
  return j.dump(2);
}

BenchReport run_stage_bench(const BenchConfig& cfg) {
  return run_stage_bench(container::Container::open(cfg.data), cfg);
}

BenchReport run_stage_bench(const container::ContainerHandle& data, const BenchConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = data->size();
  if (n == 0) throw ConfigError("dataset is empty");
  const std::uint64_t warm = static_cast<std::uint64_t>(cfg.warmup_batches) * cfg.batch;
  const std::uint64_t measured = cfg.measured_images();
  const pipeline::RrcConfig rrc{cfg.scale_lo, cfg.scale_hi, 3.0 / 4.0, 4.0 / 3.0, cfg.res, 10};

  // Stream position p visits permutation(pass = p / n)[p % n].
  std::vector<std::vector<std::uint64_t>> perms;
  auto at = [&](std::uint64_t p) -> std::pair<std::uint64_t, std::uint64_t> {
    const std::uint64_t pass = p / n;
    while (perms.size() <= pass) {
      perms.push_back(pipeline::epoch_permutation(n, cfg.seed, static_cast<int>(perms.size())));
    }
    return {perms[pass][p % n], pass};
  };
  std::vector<std::pair<std::uint64_t, std::uint64_t>> stream(warm + measured);
  for (std::uint64_t p = 0; p < stream.size(); ++p) stream[p] = at(p);

  ThreadPool pool(cfg.workers);
  std::vector<Scratch> scratch(static_cast<std::size_t>(cfg.batch));
  std::vector<jpeg::DecodeStats> slot_stats(static_cast<std::size_t>(cfg.batch));
  std::atomic<std::uint64_t> sink{0};

  auto run_range = [&](std::uint64_t begin, std::uint64_t end, jpeg::DecodeStats* total,
                       std::uint64_t* fallbacks) {
    for (std::uint64_t b = begin; b < end; b += cfg.batch) {
      const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(cfg.batch, end - b));
      pool.parallel_for(count, [&](std::size_t i) {
        const auto [index, pass] = stream[b + i];
        slot_stats[i] = run_one(*data, index, pass, cfg, rrc, scratch[i], sink);
      });
      if (total != nullptr) {
        for (std::size_t i = 0; i < count; ++i) {
          *total += slot_stats[i];
          *fallbacks += slot_stats[i].fallback_full ? 1 : 0;
        }
      }
    }
  };

  BenchReport r;
  r.stage = cfg.stage;
  r.decode = cfg.decode;
  r.images = measured;
  r.dataset_size = n;
  r.workers = pool.size();
  r.batch = cfg.batch;
  r.res = cfg.res;
  r.seed = cfg.seed;
  r.environment = environment_note(pool.size());

  run_range(0, warm, nullptr, nullptr);
  double best = 0.0;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    jpeg::DecodeStats stats;
    std::uint64_t fallbacks = 0;
    const auto t0 = Clock::now();
    run_range(warm, warm + measured, &stats, &fallbacks);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (rep == 0) {
      r.stats = stats;
      r.stats.fallback_full = fallbacks > 0;
      r.fallback_count = fallbacks;
    }
    if (best == 0.0 || secs < best) best = secs;
  }
  r.seconds = best;
  r.throughput = static_cast<double>(measured) / std::max(best, 1e-9);
  return r;
}

// ---------------------------------------------------------------- diff

namespace {

class DirectorySource final : public ImageSource {
 public:
  explicit DirectorySource(const std::filesystem::path& dir) : items_(container::scan_source(dir)) {}
  std::size_t size() const override { return items_.size(); }
  RgbImage load(std::size_t i) const override { return container::load_image(items_.at(i).path); }

 private:
  std::vector<container::SourceItem> items_;
};

class ContainerSource final : public ImageSource {
 public:
  explicit ContainerSource(const std::filesystem::path& file) : data_(container::Container::open(file)) {}
  std::size_t size() const override { return static_cast<std::size_t>(data_->size()); }
  RgbImage load(std::size_t i) const override { return jpeg::decode_full(data_->read(i).jpeg).image; }

 private:
  container::ContainerHandle data_;
};

}  // namespace

std::unique_ptr<ImageSource> open_source(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) return std::make_unique<DirectorySource>(path);
  return std::make_unique<ContainerSource>(path);
}

RgbImage center_crop(const RgbImage& img, int w, int h) {
  w = std::min(w, img.width());
  h = std::min(h, img.height());
  return crop(img, CropRect{(img.width() - w) / 2, (img.height() - h) / 2, w, h});
}

double mean_abs_error(const RgbImage& a, const RgbImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw RangeError("image sizes differ");
  const auto pa = a.pixels(), pb = b.pixels();
  if (pa.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) sum += static_cast<std::uint64_t>(std::abs(int(pa[i]) - int(pb[i])));
  return static_cast<double>(sum) / (255.0 * static_cast<double>(pa.size()));
}

std::string DiffReport::to_json(bool include_samples) const {
  json j{{"count", per_sample.size()}, {"mean", mean}, {"max", max}};
  if (include_samples) j["per_sample"] = per_sample;
  return j.dump(2);
}

DiffReport diff_datasets(const ImageSource& a, const ImageSource& b, int size, int workers) {
  if (a.size() != b.size()) {
    throw ConfigError("sample count mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  DiffReport r;
  r.per_sample.assign(a.size(), 0.0);
  ThreadPool pool(workers);
  pool.parallel_for(a.size(), [&](std::size_t i) {
    RgbImage x = a.load(i), y = b.load(i);
    if (x.width() != y.width() || x.height() != y.height()) {
      const auto area = [](const RgbImage& m) { return std::int64_t{m.width()} * m.height(); };
      const bool x_larger = area(x) != area(y) ? area(x) > area(y) : x.width() > y.width();
      if (x_larger) {
        x = pipeline::resize_bilinear(x, y.width(), y.height());
      } else {
        y = pipeline::resize_bilinear(y, x.width(), x.height());
      }
    }
    if (size > 0) {
      x = center_crop(x, size, size);
      y = center_crop(y, size, size);
    }
    r.per_sample[i] = mean_abs_error(x, y);
  });
  double total = 0.0;
  for (double v : r.per_sample) {
    total += v;
    r.max = std::max(r.max, v);
  }
  r.mean = r.per_sample.empty() ? 0.0 : total / static_cast<double>(r.per_sample.size());
  return r;
}

// ---------------------------------------------------------------- sweep

std::vector<SweepRow> compression_sweep(const SweepConfig& cfg) {
  if (cfg.resolutions.empty() || cfg.qualities.empty()) throw ConfigError("sweep needs at least one cell");
  const auto items = container::scan_source(cfg.source);
  if (items.empty()) throw IoError("no images found under " + cfg.source.string());
  std::filesystem::path work = cfg.work_dir;
  if (work.empty()) work = std::filesystem::temp_directory_path() / "essl-sweep";
  std::filesystem::create_directories(work);
  const DirectorySource originals(cfg.source);

  std::vector<SweepRow> rows;
  for (int res : cfg.resolutions) {
    for (int q : cfg.qualities) {
      SweepRow row;
      row.res = res;
      row.quality = q;
      const auto path = work / ("sweep_" + std::to_string(res) + "_" + std::to_string(q) + ".essl");
      container::BuildSpec spec;
      spec.source = cfg.source;
      spec.max_resolution = res;
      spec.quality = q;
      spec.seed = cfg.seed;
      spec.workers = cfg.workers;
      const auto t0 = Clock::now();
      const auto summary = container::build_container(items, spec, path);
      row.build_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      row.bytes = summary.total_bytes;

      BenchConfig bc;
      bc.stage = Stage::Decode;
      bc.batch = cfg.batch;
      bc.workers = cfg.workers;
      bc.seed = cfg.seed;
      bc.repeats = cfg.repeats;
      bc.images = cfg.bench_images > 0 ? cfg.bench_images
                                       : std::max<std::uint64_t>(summary.sample_count, 10ull * cfg.batch);
      const auto handle = container::Container::open(path);
      row.throughput = run_stage_bench(handle, bc).throughput;
      row.mae = diff_datasets(originals, ContainerSource(path), 0, cfg.workers).mean;
      if (!cfg.keep_containers) std::filesystem::remove(path);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "res,quality,bytes,build_seconds,throughput,mae\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%llu,%.6f,%.3f,%.8f\n", r.res, r.quality,
                  static_cast<unsigned long long>(r.bytes), r.build_seconds, r.throughput, r.mae);
    out << buf;
  }
  return out.str();
}

}  // namespace essl::bench
