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

#include <filesystem>
#include <fstream>

#include "corpus.hpp"
#include "essl/container.hpp"
#include "essl/error.hpp"
#include "essl/jpeg.hpp"
#include "essl/rng.hpp"

namespace essl::container {
namespace {

namespace fs = std::filesystem;

fs::path corpus20() {
  testsupport::CorpusSpec spec;
  spec.images = 20;
  return testsupport::ensure_corpus(spec);
}

fs::path temp_path(const std::string& name) { return fs::path(testing::TempDir()) / name; }

std::vector<std::uint8_t> file_bytes(const fs::path& p) { return testsupport::read_bytes(p); }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::uint64_t le(const std::vector<std::uint8_t>& b, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = v << 8 | b[off + static_cast<std::size_t>(i)];
  return v;
}

TEST(Container, HeaderAndRecordCodecRoundTrip) {
  ContainerHeader h;
  h.sample_count = 123456789012ULL;
  h.sample_table_offset = 4096;
  h.payload_offset = 8192;
  h.max_resolution = 500;
  h.quality = 95;
  h.build_seed = 0xdeadbeefcafef00dULL;
  std::uint8_t buf[kHeaderBytes];
  encode_header(h, buf);
  EXPECT_EQ(decode_header(buf), h);
  EXPECT_EQ(std::string(reinterpret_cast<char*>(buf), 4), "ESSL");
  SampleRecord r{0x123456789aULL, 77777, 500, 375, 9, 0xabcdef01u};
  std::uint8_t rb[kRecordBytes];
  encode_record(r, rb);
  EXPECT_EQ(decode_record(rb), r);
  EXPECT_EQ(rb[0], 0x9a);  // little-endian
}

TEST(Container, Crc32KnownValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0xCBF43926u);
}

TEST(Container, FitWithin) {
  EXPECT_EQ(fit_within(1000, 750, 500), (std::pair{500, 375}));
  EXPECT_EQ(fit_within(750, 1000, 500), (std::pair{375, 500}));
  EXPECT_EQ(fit_within(100, 100, 500), (std::pair{100, 100}));
  EXPECT_EQ(fit_within(333, 1000, 256), (std::pair{85, 256}));
  EXPECT_EQ(fit_within(5000, 1, 256), (std::pair{256, 1}));
}

TEST(Container, RoundTripAndLayout) {
  const fs::path out = temp_path("rt.essl");
  BuildSpec spec;
  spec.source = corpus20();
  spec.max_resolution = 256;
  spec.quality = 90;
  spec.seed = 11;
  const auto summary = build_container(spec, out);
  EXPECT_EQ(summary.sample_count, 20u);
  EXPECT_EQ(summary.class_count, 10u);
  EXPECT_EQ(summary.total_bytes, fs::file_size(out));

  const auto items = scan_source(spec.source);
  const auto c = Container::open(out);
  ASSERT_EQ(c->size(), items.size());
  EXPECT_EQ(c->header().max_resolution, 256);
  EXPECT_EQ(c->header().quality, 90);
  EXPECT_EQ(c->header().build_seed, 11u);
  EXPECT_EQ(c->header().sample_table_offset % kAlignment, 0u);
  EXPECT_EQ(c->header().payload_offset % kAlignment, 0u);

  // Independent parse of the raw bytes.
  const auto raw = file_bytes(out);
  EXPECT_EQ(le(raw, 4, 2), 1u);
  EXPECT_EQ(le(raw, 6, 8), 20u);
  const std::size_t table = le(raw, 14, 8);
  for (std::uint64_t i = 0; i < c->size(); ++i) {
    const std::size_t rec = table + i * kRecordBytes;
    const std::uint64_t off = le(raw, rec, 8);
    const std::uint32_t len = static_cast<std::uint32_t>(le(raw, rec + 8, 4));
    EXPECT_EQ(off % kPayloadAlignment, 0u);
    EXPECT_GE(off, c->header().payload_offset);
    ASSERT_LE(off + len, raw.size());
    EXPECT_EQ(le(raw, rec + 20, 4), crc32({raw.data() + off, len}));

    const RgbImage src = load_image(items[i].path);
    const auto view = c->read(i);
    EXPECT_EQ(view.label, items[i].label);
    EXPECT_EQ(std::pair(view.width, view.height), fit_within(src.width(), src.height(), 256));
    EXPECT_EQ(std::max(view.width, view.height), std::min(256, std::max(src.width(), src.height())));
    EXPECT_EQ(std::vector<std::uint8_t>(view.jpeg.begin(), view.jpeg.end()), prepare_payload(src, 256, 90));
    const auto info = jpeg::read_info(view.jpeg);
    EXPECT_EQ(info.width, view.width);
    EXPECT_EQ(info.height, view.height);
  }
}

TEST(Container, SmallImagesAreNotUpscaled) {
  const fs::path src = temp_path("small_src");
  fs::remove_all(src);
  fs::create_directories(src / "a");
  fs::create_directories(src / "b");
  save_ppm(testsupport::synthetic_image(100, 100, 1), src / "a" / "x.ppm");
  save_ppm(testsupport::synthetic_image(640, 480, 2), src / "b" / "y.ppm");
  const fs::path out = temp_path("small.essl");
  BuildSpec spec;
  spec.source = src;
  build_container(spec, out);
  const auto c = Container::open(out);
  ASSERT_EQ(c->size(), 2u);
  EXPECT_EQ(c->read(0).width, 100);
  EXPECT_EQ(c->read(0).height, 100);
  EXPECT_EQ(c->read(0).label, 0u);
  EXPECT_EQ(c->read(1).width, 500);
  EXPECT_EQ(c->read(1).height, 375);
  EXPECT_EQ(c->read(1).label, 1u);
}

TEST(Container, BuildIsDeterministicAcrossWorkers) {
  BuildSpec spec;
  spec.source = corpus20();
  spec.seed = 5;
  spec.workers = 1;
  build_container(spec, temp_path("d1.essl"));
  spec.workers = 4;
  build_container(spec, temp_path("d4.essl"));
  build_container(spec, temp_path("d4b.essl"));
  const auto a = file_bytes(temp_path("d1.essl"));
  EXPECT_EQ(a, file_bytes(temp_path("d4.essl")));
  EXPECT_EQ(a, file_bytes(temp_path("d4b.essl")));
}

TEST(Container, RejectsBadMagicAndVersion) {
  const fs::path good = testsupport::ensure_container(corpus20(), 256, 95, "cont");
  auto bytes = file_bytes(good);
  bytes[0] ^= 0xff;
  write_bytes(temp_path("magic.essl"), bytes);
  EXPECT_THROW(Container::open(temp_path("magic.essl")), FormatError);
  bytes = file_bytes(good);
  bytes[4] = 9;
  write_bytes(temp_path("version.essl"), bytes);
  EXPECT_THROW(Container::open(temp_path("version.essl")), FormatError);
  EXPECT_THROW(Container::open(temp_path("does_not_exist.essl")), IoError);
  write_bytes(temp_path("tiny.essl"), {'E', 'S'});
  EXPECT_THROW(Container::open(temp_path("tiny.essl")), Error);
}

TEST(Container, TruncatedPayloadFailsOnRead) {
  const fs::path good = testsupport::ensure_container(corpus20(), 256, 95, "cont");
  const auto c = Container::open(good);
  const auto last = c->record(c->size() - 1);
  auto bytes = file_bytes(good);
  bytes.resize(last.payload_offset + last.payload_length / 2);
  write_bytes(temp_path("trunc.essl"), bytes);
  const auto t = Container::open(temp_path("trunc.essl"));
  EXPECT_NO_THROW(t->read(0));
  try {
    t->read(c->size() - 1);
    FAIL();
  } catch (const CorruptionError& e) {
    EXPECT_EQ(e.index(), static_cast<std::int64_t>(c->size() - 1));
  }
  bytes.resize(c->header().sample_table_offset + 10);
  write_bytes(temp_path("trunc_table.essl"), bytes);
  EXPECT_THROW(Container::open(temp_path("trunc_table.essl")), CorruptionError);
}

TEST(Container, ChecksumMismatchNamesIndex) {
  const fs::path good = testsupport::ensure_container(corpus20(), 256, 95, "cont");
  const auto rec = Container::open(good)->record(3);
  auto bytes = file_bytes(good);
  bytes[rec.payload_offset + 100] ^= 1;
  write_bytes(temp_path("crc.essl"), bytes);
  const auto c = Container::open(temp_path("crc.essl"));
  EXPECT_NO_THROW(c->read(2));
  try {
    c->read(3);
    FAIL();
  } catch (const CorruptionError& e) {
    EXPECT_EQ(e.index(), 3);
  }
}

TEST(Container, IndexOutOfRange) {
  const auto c = Container::open(testsupport::ensure_container(corpus20(), 256, 95, "cont"));
  EXPECT_THROW(c->read(c->size()), RangeError);
  EXPECT_THROW(c->record(~0ULL), RangeError);
}

TEST(Container, RandomOrderReadsAreStable) {
  const auto c = Container::open(testsupport::ensure_container(corpus20(), 256, 95, "cont"));
  std::vector<std::uint32_t> crcs;
  for (std::uint64_t i = 0; i < c->size(); ++i) crcs.push_back(crc32(c->read(i).jpeg));
  SampleRng rng(1, 0, 0);
  for (int k = 0; k < 10000; ++k) {
    const auto i = rng.below(c->size());
    ASSERT_EQ(crc32(c->read(i).jpeg), crcs[i]);
  }
}

TEST(Container, SizeGrowsWithResolutionAndQuality) {
  const fs::path src = corpus20();
  std::uint64_t prev = 0;
  for (auto [res, q] : {std::pair{256, 90}, {256, 95}, {500, 95}, {500, 100}}) {
    const auto size = fs::file_size(testsupport::ensure_container(src, res, q, "grow"));
    EXPECT_GT(size, prev) << res << " q" << q;
    prev = size;
  }
}

TEST(Container, ScanSourceOrderingAndFilters) {
  const fs::path src = temp_path("scan_src");
  fs::remove_all(src);
  for (const char* d : {"zeta", "alpha", ".hidden"}) fs::create_directories(src / d);
  const RgbImage img = testsupport::synthetic_image(80, 80, 3);
  save_ppm(img, src / "zeta" / "b.ppm");
  save_ppm(img, src / "zeta" / "a.ppm");
  save_ppm(img, src / "alpha" / "c.ppm");
  save_ppm(img, src / ".hidden" / "d.ppm");
  std::ofstream(src / "alpha" / "notes.txt") << "x";
  const auto items = scan_source(src);
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].path.filename(), "c.ppm");
  EXPECT_EQ(items[0].label, 0u);
  EXPECT_EQ(items[1].path.filename(), "a.ppm");
  EXPECT_EQ(items[2].label, 1u);
  EXPECT_THROW(scan_source(temp_path("no_such_dir")), Error);
}

}  // namespace
}  // namespace essl::container
