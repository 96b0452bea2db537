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


#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include "essl/container.hpp"
#include "essl/error.hpp"
#include "essl/jpeg.hpp"
#include "essl/pipeline.hpp"
#include "essl/thread_pool.hpp"

namespace essl::container {
namespace fs = std::filesystem;

namespace {

template <typename T>
void put(std::uint8_t*& p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) *p++ = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
}

template <typename T>
T take(const std::uint8_t*& p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
  return static_cast<T>(v);
}

constexpr std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

bool is_image_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ".jpg" || e == ".jpeg" || e == ".ppm";
}

bool hidden(const fs::path& p) {
  const std::string n = p.filename().string();
  return !n.empty() && n[0] == '.';
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string() + ": " + std::strerror(errno));
  return {std::istreambuf_iterator<char>(f), {}};
}

// Netpbm whitespace/comment skipping.
void skip_ws(const std::vector<std::uint8_t>& b, std::size_t& i) {
  for (;;) {
    while (i < b.size() && std::isspace(b[i])) ++i;
    if (i < b.size() && b[i] == '#') {
      while (i < b.size() && b[i] != '\n') ++i;
    } else {
      return;
    }
  }
}

int read_int(const std::vector<std::uint8_t>& b, std::size_t& i, const fs::path& path) {
  skip_ws(b, i);
  if (i >= b.size() || !std::isdigit(b[i])) throw DecodeError("bad PPM header in " + path.string(), i);
  long v = 0;
  while (i < b.size() && std::isdigit(b[i]) && v < 1'000'000) v = v * 10 + (b[i++] - '0');
  return static_cast<int>(v);
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& b, const fs::path& path) {
  std::size_t i = 2;
  const int w = read_int(b, i, path), h = read_int(b, i, path), maxval = read_int(b, i, path);
  if (w < 1 || h < 1 || maxval != 255) throw DecodeError("unsupported PPM in " + path.string(), i);
  ++i;  // single whitespace byte before the raster
  RgbImage img(w, h);
  if (b.size() < i + img.pixels().size()) throw DecodeError("truncated PPM " + path.string(), b.size());
  std::memcpy(img.pixels().data(), b.data() + i, img.pixels().size());
  return img;
}

}  // namespace

void encode_header(const ContainerHeader& h, std::uint8_t* out) {
  std::memcpy(out, h.magic, 4);
  std::uint8_t* p = out + 4;
  put(p, h.version);
  put(p, h.sample_count);
  put(p, h.sample_table_offset);
  put(p, h.payload_offset);
  put(p, h.max_resolution);
  put(p, h.quality);
  put(p, h.build_seed);
  put(p, h.alignment);
}

ContainerHeader decode_header(const std::uint8_t* in) {
  ContainerHeader h;
  std::memcpy(h.magic, in, 4);
  const std::uint8_t* p = in + 4;
  h.version = take<std::uint16_t>(p);
  h.sample_count = take<std::uint64_t>(p);
  h.sample_table_offset = take<std::uint64_t>(p);
  h.payload_offset = take<std::uint64_t>(p);
  h.max_resolution = take<std::uint16_t>(p);
  h.quality = take<std::uint8_t>(p);
  h.build_seed = take<std::uint64_t>(p);
  h.alignment = take<std::uint32_t>(p);
  return h;
}

void encode_record(const SampleRecord& r, std::uint8_t* out) {
  put(out, r.payload_offset);
  put(out, r.payload_length);
  put(out, r.width);
  put(out, r.height);
  put(out, r.label);
  put(out, r.checksum);
}

SampleRecord decode_record(const std::uint8_t* in) {
  SampleRecord r;
  r.payload_offset = take<std::uint64_t>(in);
  r.payload_length = take<std::uint32_t>(in);
  r.width = take<std::uint16_t>(in);
  r.height = take<std::uint16_t>(in);
  r.label = take<std::uint32_t>(in);
  r.checksum = take<std::uint32_t>(in);
  return r;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32_z(0L, bytes.data(), bytes.size()));
}

std::vector<SourceItem> scan_source(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("source is not a directory: " + dir.string());
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && !hidden(e.path())) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<SourceItem> items;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c])) {
      if (e.is_regular_file() && !hidden(e.path()) && is_image_ext(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    for (auto& f : files) items.push_back({std::move(f), static_cast<std::uint32_t>(c)});
  }
  return items;
}

RgbImage load_image(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) return jpeg::decode_full(bytes).image;
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what(), e.offset());
  }
  throw DecodeError(path.string() + ": not a JPEG or binary PPM file", 0);
}

void save_ppm(const RgbImage& image, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  f.write(reinterpret_cast<const char*>(image.pixels().data()), static_cast<std::streamsize>(image.pixels().size()));
  if (!f) throw IoError("write failed: " + path.string());
}

std::pair<int, int> fit_within(int width, int height, int max_side) {
  const int largest = std::max(width, height);
  if (largest <= max_side) return {width, height};
  auto scale = [&](int v) {
    return std::max(1, static_cast<int>((static_cast<std::int64_t>(v) * max_side + largest / 2) / largest));
  };
  return {width >= height ? max_side : scale(width), height > width ? max_side : scale(height)};
}

std::vector<std::uint8_t> prepare_payload(const RgbImage& image, int max_resolution, int quality,
                                          int* out_w, int* out_h) {
  const auto [w, h] = fit_within(image.width(), image.height(), max_resolution);
  if (out_w) *out_w = w;
  if (out_h) *out_h = h;
  if (w == image.width() && h == image.height()) return jpeg::encode(image, quality);
  return jpeg::encode(pipeline::resize_bilinear(image, w, h), quality);
}

BuildSummary build_container(const BuildSpec& spec, const fs::path& out) {
  const auto items = scan_source(spec.source);
  if (items.empty()) throw IoError("no images found under " + spec.source.string());
  return build_container(items, spec, out);
}

BuildSummary build_container(const std::vector<SourceItem>& items, const BuildSpec& spec,
                             const fs::path& out) {
  if (spec.quality < 1 || spec.quality > 100) throw ConfigError("quality must be in [1, 100]");
  if (spec.max_resolution < kMinResolution || spec.max_resolution > 65535) {
    throw ConfigError("max resolution must be in [64, 65535]");
  }
  if (items.empty()) throw IoError("no source images");

  const std::uint64_t n = items.size();
  ContainerHeader header;
  header.sample_count = n;
  header.sample_table_offset = kAlignment;
  header.payload_offset = align_up(kAlignment + n * kRecordBytes, kAlignment);
  header.max_resolution = static_cast<std::uint16_t>(spec.max_resolution);
  header.quality = static_cast<std::uint8_t>(spec.quality);
  header.build_seed = spec.seed;

  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + out.string() + ": " + std::strerror(errno));
  const std::vector<char> zeros(kAlignment, 0);
  f.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));  // header page, filled at the end
  std::uint64_t pos = kAlignment;
  auto pad_to = [&](std::uint64_t target) {
    while (pos < target) {
      const auto chunk = std::min<std::uint64_t>(target - pos, zeros.size());
      f.write(zeros.data(), static_cast<std::streamsize>(chunk));
      pos += chunk;
    }
  };
  pad_to(header.payload_offset);  // record table placeholder

  std::vector<SampleRecord> records(n);
  ThreadPool pool(spec.workers);
  const std::size_t chunk = static_cast<std::size_t>(pool.size()) * 16;
  struct Encoded {
    std::vector<std::uint8_t> bytes;
    int w = 0, h = 0;
  };
  std::vector<Encoded> slots;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t count = std::min<std::size_t>(chunk, n - begin);
    slots.assign(count, {});
    pool.parallel_for(count, [&](std::size_t i) {
      const SourceItem& item = items[begin + i];
      const RgbImage img = load_image(item.path);
      Encoded& e = slots[i];
      e.bytes = prepare_payload(img, spec.max_resolution, spec.quality, &e.w, &e.h);
    });
    // Appended strictly in source order so the bytes never depend on timing.
    for (std::size_t i = 0; i < count; ++i) {
      Encoded& e = slots[i];
      pad_to(align_up(pos, kPayloadAlignment));
      SampleRecord& r = records[begin + i];
      r.payload_offset = pos;
      r.payload_length = static_cast<std::uint32_t>(e.bytes.size());
      r.width = static_cast<std::uint16_t>(e.w);
      r.height = static_cast<std::uint16_t>(e.h);
      r.label = items[begin + i].label;
      r.checksum = crc32(e.bytes);
      f.write(reinterpret_cast<const char*>(e.bytes.data()), static_cast<std::streamsize>(e.bytes.size()));
      pos += e.bytes.size();
      std::vector<std::uint8_t>().swap(e.bytes);
    }
    if (!f) throw IoError("write failed: " + out.string());
  }

  std::vector<std::uint8_t> head(kHeaderBytes);
  encode_header(header, head.data());
  std::vector<std::uint8_t> table(n * kRecordBytes);
  for (std::uint64_t i = 0; i < n; ++i) encode_record(records[i], table.data() + i * kRecordBytes);
  f.seekp(0);
  f.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  f.seekp(static_cast<std::streamoff>(header.sample_table_offset));
  f.write(reinterpret_cast<const char*>(table.data()), static_cast<std::streamsize>(table.size()));
  f.close();
  if (!f) throw IoError("write failed: " + out.string());

  std::uint32_t classes = 0;
  for (const auto& it : items) classes = std::max(classes, it.label + 1);
  return BuildSummary{n, pos, classes};
}

// ------------------------------------------------------------------ reader

std::shared_ptr<const Container> Container::open(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd, &st) != 0 || !S_ISREG(st.st_mode)) {
    ::close(fd);
    throw IoError("not a regular file: " + path.string());
  }
  std::shared_ptr<Container> c(new Container());
  c->path_ = path;
  c->size_ = static_cast<std::uint64_t>(st.st_size);
  if (c->size_ > 0) {
    void* m = ::mmap(nullptr, c->size_, PROT_READ, MAP_SHARED, fd, 0);
    if (m == MAP_FAILED) {
      ::close(fd);
      throw IoError("cannot map " + path.string() + ": " + std::strerror(errno));
    }
    c->data_ = static_cast<const std::uint8_t*>(m);
  }
  ::close(fd);

  const std::string where = path.string() + ": ";
  if (c->size_ < 4 || std::memcmp(c->data_, kMagic, 4) != 0) throw FormatError(where + "bad magic");
  if (c->size_ < kHeaderBytes) throw CorruptionError(where + "truncated header");
  c->header_ = decode_header(c->data_);
  const ContainerHeader& h = c->header_;
  if (h.version != kVersion) throw FormatError(where + "unsupported version " + std::to_string(h.version));
  if (h.alignment != kAlignment || h.sample_table_offset % kAlignment != 0 ||
      h.payload_offset % kAlignment != 0 || h.sample_table_offset < kAlignment) {
    throw FormatError(where + "misaligned header offsets");
  }
  if (h.quality < 1 || h.quality > 100 || h.max_resolution < kMinResolution) {
    throw FormatError(where + "header parameters out of range");
  }
  if (h.sample_count > (c->size_ / kRecordBytes) ||
      h.sample_table_offset + h.sample_count * kRecordBytes > h.payload_offset ||
      h.payload_offset > c->size_) {
    throw CorruptionError(where + "file too short for its record table");
  }
  return c;
}

Container::~Container() {
  if (data_ != nullptr) ::munmap(const_cast<std::uint8_t*>(data_), size_);
}

SampleRecord Container::record(std::uint64_t index) const {
  if (index >= header_.sample_count) {
    throw RangeError("sample index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(header_.sample_count) + ")");
  }
  return decode_record(data_ + header_.sample_table_offset + index * kRecordBytes);
}

SampleView Container::read(std::uint64_t index) const {
  const SampleRecord r = record(index);
  const auto i = static_cast<std::int64_t>(index);
  if (r.payload_offset < header_.payload_offset || r.payload_offset > size_ ||
      r.payload_length > size_ - r.payload_offset) {
    throw CorruptionError("sample " + std::to_string(index) + ": payload extends past end of file", i);
  }
  const std::span<const std::uint8_t> bytes(data_ + r.payload_offset, r.payload_length);
  if (crc32(bytes) != r.checksum) {
    throw CorruptionError("sample " + std::to_string(index) + ": checksum mismatch", i);
  }
  return SampleView{bytes, r.width, r.height, r.label};
}

}  // namespace essl::container
