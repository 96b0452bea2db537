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
#include <cstring>
#include <nlohmann/json.hpp>
#include <numeric>

#include "essl/error.hpp"
#include "essl/masking.hpp"
#include "essl/pipeline.hpp"
#include "essl/thread_pool.hpp"

namespace essl::pipeline {
namespace {

using json = nlohmann::ordered_json;

const char* const kKnownKeys[] = {"data",       "batch_size", "workers", "seed",   "res",
                                  "scale",      "ratio",      "aug",     "mask_ratio",
                                  "patch_size", "decode",     "scheme",  "total_epochs",
                                  "keep_u8"};

template <typename T>
T get(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("loader config: field '") + key + "' has the wrong type");
  }
}

std::pair<double, double> get_pair(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(std::string("loader config: field '") + key + "' must be [lo, hi]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

int resolved_total_epochs(const LoaderConfig& cfg) {
  return cfg.total_epochs > 0 ? cfg.total_epochs : cfg.scheme->total_epochs;
}

}  // namespace

void LoaderConfig::validate() const {
  if (batch_size < 1) throw ConfigError("loader config: batch_size must be >= 1");
  if (res < 16) throw ConfigError("loader config: res must be >= 16");
  if (patch_size < 1) throw ConfigError("loader config: patch_size must be >= 1");
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) {
    throw ConfigError("loader config: mask_ratio must be in [0, 1]");
  }
  RrcConfig rrc{scale_lo, scale_hi, ratio_lo, ratio_hi, res, 10};
  try {
    rrc.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("loader config: scale/ratio: ") + e.what());
  }
  if (total_epochs < 0) throw ConfigError("loader config: total_epochs must be >= 0");
  if (!scheme) {
    if (mask_ratio > 0.0 && res % patch_size != 0) {
      throw ConfigError("loader config: mask_ratio/res: res " + std::to_string(res) +
                        " is not a multiple of patch_size " + std::to_string(patch_size));
    }
    return;
  }
  scheme->validate();
  for (const auto& st : scheme->stages) {
    if (st.masking_ratio > 0.0 && st.resolution % patch_size != 0) {
      throw ConfigError("loader config: scheme mask_ratio/res: res " + std::to_string(st.resolution) +
                        " is not a multiple of patch_size " + std::to_string(patch_size));
    }
  }
}

LoaderConfig parse_loader_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("loader config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("loader config: document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
      throw ConfigError("loader config: unknown field '" + key + "'");
    }
  }
  LoaderConfig cfg;
  if (!doc.contains("data")) throw ConfigError("loader config: missing field 'data'");
  cfg.data = get<std::string>(doc, "data");
  if (doc.contains("batch_size")) cfg.batch_size = get<int>(doc, "batch_size");
  if (doc.contains("workers")) cfg.workers = get<int>(doc, "workers");
  if (doc.contains("seed")) cfg.seed = get<std::uint64_t>(doc, "seed");
  if (doc.contains("res")) cfg.res = get<int>(doc, "res");
  if (doc.contains("scale")) std::tie(cfg.scale_lo, cfg.scale_hi) = get_pair(doc, "scale");
  if (doc.contains("ratio")) std::tie(cfg.ratio_lo, cfg.ratio_hi) = get_pair(doc, "ratio");
  if (doc.contains("aug")) cfg.aug = parse_aug_level(get<std::string>(doc, "aug"));
  if (doc.contains("mask_ratio")) cfg.mask_ratio = get<double>(doc, "mask_ratio");
  if (doc.contains("patch_size")) cfg.patch_size = get<int>(doc, "patch_size");
  if (doc.contains("decode")) {
    const auto d = get<std::string>(doc, "decode");
    if (d == "crop") {
      cfg.decode = DecodeMode::Crop;
    } else if (d == "full") {
      cfg.decode = DecodeMode::Full;
    } else {
      throw ConfigError("loader config: field 'decode' must be \"crop\" or \"full\"");
    }
  }
  if (doc.contains("scheme")) {
    const json& s = doc["scheme"];
    if (s.is_string()) {
      cfg.scheme = schedule::builtin_scheme(s.get<std::string>());
    } else if (s.is_object()) {
      cfg.scheme = schedule::load_json(s.dump()).scheme;
    } else if (!s.is_null()) {
      throw ConfigError("loader config: field 'scheme' must be a name or a scheme object");
    }
  }
  if (doc.contains("total_epochs")) cfg.total_epochs = get<int>(doc, "total_epochs");
  if (doc.contains("keep_u8")) cfg.keep_u8 = get<bool>(doc, "keep_u8");
  cfg.validate();
  return cfg;
}

std::string to_json(const LoaderConfig& cfg) {
  json doc{{"data", cfg.data},
           {"batch_size", cfg.batch_size},
           {"workers", cfg.workers},
           {"seed", cfg.seed},
           {"res", cfg.res},
           {"scale", {cfg.scale_lo, cfg.scale_hi}},
           {"ratio", {cfg.ratio_lo, cfg.ratio_hi}},
           {"aug", to_string(cfg.aug)},
           {"mask_ratio", cfg.mask_ratio},
           {"patch_size", cfg.patch_size},
           {"decode", cfg.decode == DecodeMode::Crop ? "crop" : "full"}};
  if (cfg.scheme) {
    json s = json::parse(schedule::emit_json(*cfg.scheme, resolved_total_epochs(cfg)));
    s.erase("epochs");
    doc["scheme"] = s;
  }
  if (cfg.total_epochs > 0) doc["total_epochs"] = cfg.total_epochs;
  if (cfg.keep_u8) doc["keep_u8"] = true;
  return doc.dump();
}

EpochParams epoch_params(const LoaderConfig& cfg, int epoch) {
  EpochParams p;
  p.res = cfg.res;
  p.mask_ratio = cfg.mask_ratio;
  p.aug = cfg.aug;
  p.rrc = RrcConfig{cfg.scale_lo, cfg.scale_hi, cfg.ratio_lo, cfg.ratio_hi, cfg.res, 10};
  if (cfg.scheme) {
    const auto sp = schedule::params_for_epoch(*cfg.scheme, epoch, resolved_total_epochs(cfg));
    p.res = sp.resolution;
    p.mask_ratio = sp.masking_ratio;
    p.aug = sp.aug;
    p.rrc.scale_lo = sp.bounds.area_lo();
    p.rrc.scale_hi = sp.bounds.area_hi();
    p.rrc.out_size = sp.resolution;
  }
  return p;
}

SampleResult process_sample(const container::Container& data, std::uint64_t index,
                            const EpochParams& params, std::uint64_t seed, int epoch,
                            DecodeMode mode, int patch_size) {
  const container::SampleView view = data.read(index);
  const SampleRng base(seed, static_cast<std::uint64_t>(epoch), index);

  SampleResult r;
  r.label = view.label;
  SampleRng crop_rng = base.fork(SampleRng::kCrop);
  r.rect = sample_rrc(crop_rng, view.width, view.height, params.rrc);

  jpeg::Decoded d;
  try {
    if (mode == DecodeMode::Crop) {
      d = jpeg::decode_crop(view.jpeg, r.rect);
    } else {
      d = jpeg::decode_full(view.jpeg);
      d.image = crop(d.image, r.rect);
    }
  } catch (const Error& e) {
    throw CorruptionError("sample " + std::to_string(index) + ": " + e.what(),
                          static_cast<std::int64_t>(index));
  }
  r.stats = d.stats;
  r.image = resize_bilinear(d.image, params.res);

  SampleRng aug_rng = base.fork(SampleRng::kAugment);
  apply_aug(aug_rng, r.image, params.aug);

  if (params.mask_ratio > 0.0) {
    SampleRng mask_rng = base.fork(SampleRng::kMask);
    r.mask = masking::sample_mask(mask_rng, masking::MaskSpec{params.res, patch_size, params.mask_ratio});
  }
  return r;
}

std::vector<std::uint64_t> epoch_permutation(std::uint64_t n, std::uint64_t seed, int epoch) {
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::uint64_t{0});
  SampleRng rng(seed, static_cast<std::uint64_t>(epoch), ~std::uint64_t{0}, SampleRng::kPermutation);
  for (std::uint64_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  return perm;
}

Loader::Loader(const LoaderConfig& cfg) : Loader(container::Container::open(cfg.data), cfg) {}

Loader::Loader(container::ContainerHandle data, const LoaderConfig& cfg)
    : cfg_(cfg), data_(std::move(data)) {
  cfg_.validate();
  if (!data_) throw ConfigError("loader: no dataset");
  pool_ = std::make_unique<ThreadPool>(cfg_.workers);
  set_epoch(0);
}

Loader::~Loader() = default;

std::size_t Loader::batches_per_epoch() const noexcept {
  const auto b = static_cast<std::uint64_t>(cfg_.batch_size);
  return static_cast<std::size_t>((data_->size() + b - 1) / b);
}

void Loader::set_epoch(int epoch) {
  if (epoch < 0) throw RangeError("epoch must be non-negative");
  params_ = epoch_params(cfg_, epoch);
  order_ = epoch_permutation(data_->size(), cfg_.seed, epoch);
  epoch_ = epoch;
  next_batch_ = 0;
}

void Loader::batch_at(std::size_t b, ImageBatch& out) {
  if (b >= batches_per_epoch()) throw RangeError("batch index past end of epoch");
  const std::size_t begin = b * static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t count = std::min<std::size_t>(cfg_.batch_size, order_.size() - begin);
  const int res = params_.res;
  const std::size_t plane = static_cast<std::size_t>(res) * res;
  const int k = params_.mask_ratio > 0.0
                    ? masking::MaskSpec{res, cfg_.patch_size, params_.mask_ratio}.masked_count()
                    : 0;

  out.epoch = epoch_;
  out.res = res;
  out.mask_k = k;
  out.pixels.assign(count * 3 * plane, 0.0f);
  out.u8.assign(cfg_.keep_u8 ? count * 3 * plane : 0, 0);
  out.labels.assign(count, 0);
  out.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.masks.assign(count * static_cast<std::size_t>(k), 0);
  std::vector<jpeg::DecodeStats> stats(count);

  pool_->parallel_for(count, [&](std::size_t i) {
    SampleResult r = process_sample(*data_, out.indices[i], params_, cfg_.seed, epoch_, cfg_.decode,
                                    cfg_.patch_size);
    normalize(r.image, out.pixels.data() + i * 3 * plane);
    if (cfg_.keep_u8) std::memcpy(out.u8.data() + i * 3 * plane, r.image.pixels().data(), 3 * plane);
    out.labels[i] = r.label;
    std::copy(r.mask.begin(), r.mask.end(), out.masks.begin() + static_cast<std::ptrdiff_t>(i * k));
    stats[i] = r.stats;
  });
  out.stats = {};
  for (const auto& s : stats) out.stats += s;
}

bool Loader::next(ImageBatch& out) {
  if (next_batch_ >= batches_per_epoch()) return false;
  batch_at(next_batch_, out);
  ++next_batch_;
  return true;
}

std::optional<ImageBatch> Loader::next() {
  ImageBatch b;
  if (!next(b)) return std::nullopt;
  return b;
}

}  // namespace essl::pipeline
