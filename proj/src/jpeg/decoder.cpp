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

// Baseline and progressive Huffman JPEG decoder with region decoding.
//
// Single-scan sequential files are decoded in streaming order: every MCU up
// to the last row the region touches is entropy decoded (Huffman streams
// cannot be skipped), but only MCUs intersecting the region are dequantized,
// inverse transformed and colour converted. Everything else (progressive and
// multi-scan files) goes through a coefficient buffer and is decoded in full.
//
// Reconstruction is MCU-local: box chroma upsampling, islow integer IDCT and
// fixed-point YCbCr->RGB. That keeps region output bit-identical to a full
// decode and, for the same settings (JDCT_ISLOW, no fancy upsampling), to
// libjpeg.

#include <algorithm>
#include <array>
#include <climits>
#include <cstring>
#include <string>

#include "essl/error.hpp"
#include "essl/jpeg.hpp"
#include "jpeg/tables.hpp"

namespace essl::jpeg {
namespace {

using namespace detail;

constexpr int kMaxComponents = 4;
constexpr int kMaxBlocksPerMcu = 10;

struct HuffTable {
  bool present = false;
  // Indexed by the next 9 bits: (code length << 8) | symbol, 0 when the code
  // is longer than 9 bits.
  std::array<std::uint16_t, 512> fast{};
  std::array<std::int32_t, 18> maxcode{};
  std::array<std::int32_t, 17> valoffset{};
  std::array<std::uint8_t, 256> vals{};
};

struct QuantTable {
  bool present = false;
  std::array<std::uint16_t, 64> q{};  // natural order
};

struct Component {
  int id = 0;
  int h = 1;
  int v = 1;
  int tq = 0;
  int td = 0;
  int ta = 0;
  int dc_pred = 0;
  int width_blocks = 0;   // blocks covering the component's own samples
  int height_blocks = 0;
  int padded_bw = 0;      // blocks covering the MCU grid
  int padded_bh = 0;
  bool quant_latched = false;
  std::array<std::uint16_t, 64> quant{};
  std::vector<std::int16_t> coeffs;  // buffered mode only

  std::int16_t* block(int bx, int by) {
    return coeffs.data() + (static_cast<std::size_t>(by) * padded_bw + bx) * 64;
  }
};

struct ScanHeader {
  int ns = 0;
  std::array<int, kMaxComponents> comp{};  // indices into frame components
  int ss = 0;
  int se = 63;
  int ah = 0;
  int al = 0;
};

struct ColorTables {
  std::array<int, 256> cr_r{};
  std::array<int, 256> cb_b{};
  std::array<std::int32_t, 256> cr_g{};
  std::array<std::int32_t, 256> cb_g{};

  ColorTables() {
    constexpr int kScale = 16;
    constexpr std::int32_t kHalf = std::int32_t{1} << (kScale - 1);
    auto fix = [](double x) { return static_cast<std::int32_t>(x * (1 << kScale) + 0.5); };
    for (int i = 0; i < 256; ++i) {
      const std::int32_t x = i - 128;
      cr_r[i] = static_cast<int>((fix(1.40200) * x + kHalf) >> kScale);
      cb_b[i] = static_cast<int>((fix(1.77200) * x + kHalf) >> kScale);
      cr_g[i] = -fix(0.71414) * x;
      cb_g[i] = -fix(0.34414) * x + kHalf;
    }
  }
};

const ColorTables& color_tables() {
  static const ColorTables tables;
  return tables;
}

inline std::uint8_t clamp_u8(int v) {
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

// Post-IDCT range limiting: the descaled value is taken modulo 1024, then
// mapped as if offset by +128 and clamped.
inline std::uint8_t idct_limit(std::int64_t x) {
  const int t = static_cast<int>(x & 1023);
  if (t < 128) return static_cast<std::uint8_t>(t + 128);
  if (t < 512) return 255;
  if (t < 896) return 0;
  return static_cast<std::uint8_t>(t - 896);
}

// Accurate integer inverse DCT (islow), output 8x8 samples.
void idct_islow(const std::int16_t* coef, const std::uint16_t* quant, std::uint8_t* out,
                std::size_t stride) {
  std::int32_t ws[64];
  for (int col = 0; col < 8; ++col) {
    const std::int16_t* in = coef + col;
    const std::uint16_t* q = quant + col;
    std::int32_t* w = ws + col;
    if (in[8] == 0 && in[16] == 0 && in[24] == 0 && in[32] == 0 && in[40] == 0 &&
        in[48] == 0 && in[56] == 0) {
      const std::int32_t dc = (static_cast<std::int32_t>(in[0]) * q[0]) * (1 << kPass1Bits);
      for (int k = 0; k < 8; ++k) w[k * 8] = dc;
      continue;
    }
    std::int64_t z2 = static_cast<std::int64_t>(in[16]) * q[16];
    std::int64_t z3 = static_cast<std::int64_t>(in[48]) * q[48];
    std::int64_t z1 = (z2 + z3) * kFix0_541196100;
    std::int64_t tmp2 = z1 + z3 * (-kFix1_847759065);
    std::int64_t tmp3 = z1 + z2 * kFix0_765366865;
    z2 = static_cast<std::int64_t>(in[0]) * q[0];
    z3 = static_cast<std::int64_t>(in[32]) * q[32];
    std::int64_t tmp0 = (z2 + z3) * (std::int64_t{1} << kConstBits);
    std::int64_t tmp1 = (z2 - z3) * (std::int64_t{1} << kConstBits);
    const std::int64_t tmp10 = tmp0 + tmp3;
    const std::int64_t tmp13 = tmp0 - tmp3;
    const std::int64_t tmp11 = tmp1 + tmp2;
    const std::int64_t tmp12 = tmp1 - tmp2;

    tmp0 = static_cast<std::int64_t>(in[56]) * q[56];
    tmp1 = static_cast<std::int64_t>(in[40]) * q[40];
    tmp2 = static_cast<std::int64_t>(in[24]) * q[24];
    tmp3 = static_cast<std::int64_t>(in[8]) * q[8];
    z1 = tmp0 + tmp3;
    z2 = tmp1 + tmp2;
    z3 = tmp0 + tmp2;
    std::int64_t z4 = tmp1 + tmp3;
    const std::int64_t z5 = (z3 + z4) * kFix1_175875602;
    tmp0 *= kFix0_298631336;
    tmp1 *= kFix2_053119869;
    tmp2 *= kFix3_072711026;
    tmp3 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 *= -kFix1_961570560;
    z4 *= -kFix0_390180644;
    z3 += z5;
    z4 += z5;
    tmp0 += z1 + z3;
    tmp1 += z2 + z4;
    tmp2 += z2 + z3;
    tmp3 += z1 + z4;

    constexpr int kShift = kConstBits - kPass1Bits;
    w[0] = static_cast<std::int32_t>(descale(tmp10 + tmp3, kShift));
    w[56] = static_cast<std::int32_t>(descale(tmp10 - tmp3, kShift));
    w[8] = static_cast<std::int32_t>(descale(tmp11 + tmp2, kShift));
    w[48] = static_cast<std::int32_t>(descale(tmp11 - tmp2, kShift));
    w[16] = static_cast<std::int32_t>(descale(tmp12 + tmp1, kShift));
    w[40] = static_cast<std::int32_t>(descale(tmp12 - tmp1, kShift));
    w[24] = static_cast<std::int32_t>(descale(tmp13 + tmp0, kShift));
    w[32] = static_cast<std::int32_t>(descale(tmp13 - tmp0, kShift));
  }

  constexpr int kShift = kConstBits + kPass1Bits + 3;
  for (int row = 0; row < 8; ++row) {
    const std::int32_t* w = ws + row * 8;
    std::uint8_t* o = out + static_cast<std::size_t>(row) * stride;
    if (w[1] == 0 && w[2] == 0 && w[3] == 0 && w[4] == 0 && w[5] == 0 && w[6] == 0 && w[7] == 0) {
      const std::uint8_t dc = idct_limit(descale(w[0], kPass1Bits + 3));
      std::memset(o, dc, 8);
      continue;
    }
    std::int64_t z2 = w[2];
    std::int64_t z3 = w[6];
    std::int64_t z1 = (z2 + z3) * kFix0_541196100;
    std::int64_t tmp2 = z1 + z3 * (-kFix1_847759065);
    std::int64_t tmp3 = z1 + z2 * kFix0_765366865;
    std::int64_t tmp0 = (static_cast<std::int64_t>(w[0]) + w[4]) * (std::int64_t{1} << kConstBits);
    std::int64_t tmp1 = (static_cast<std::int64_t>(w[0]) - w[4]) * (std::int64_t{1} << kConstBits);
    const std::int64_t tmp10 = tmp0 + tmp3;
    const std::int64_t tmp13 = tmp0 - tmp3;
    const std::int64_t tmp11 = tmp1 + tmp2;
    const std::int64_t tmp12 = tmp1 - tmp2;

    tmp0 = w[7];
    tmp1 = w[5];
    tmp2 = w[3];
    tmp3 = w[1];
    z1 = tmp0 + tmp3;
    z2 = tmp1 + tmp2;
    z3 = tmp0 + tmp2;
    std::int64_t z4 = tmp1 + tmp3;
    const std::int64_t z5 = (z3 + z4) * kFix1_175875602;
    tmp0 *= kFix0_298631336;
    tmp1 *= kFix2_053119869;
    tmp2 *= kFix3_072711026;
    tmp3 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 *= -kFix1_961570560;
    z4 *= -kFix0_390180644;
    z3 += z5;
    z4 += z5;
    tmp0 += z1 + z3;
    tmp1 += z2 + z4;
    tmp2 += z2 + z3;
    tmp3 += z1 + z4;

    o[0] = idct_limit(descale(tmp10 + tmp3, kShift));
    o[7] = idct_limit(descale(tmp10 - tmp3, kShift));
    o[1] = idct_limit(descale(tmp11 + tmp2, kShift));
    o[6] = idct_limit(descale(tmp11 - tmp2, kShift));
    o[2] = idct_limit(descale(tmp12 + tmp1, kShift));
    o[5] = idct_limit(descale(tmp12 - tmp1, kShift));
    o[3] = idct_limit(descale(tmp13 + tmp0, kShift));
    o[4] = idct_limit(descale(tmp13 - tmp0, kShift));
  }
}

inline int extend(int v, int s) { return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v; }

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> data, std::size_t pos) : data_(data), pos_(pos) {}

  std::size_t position() const noexcept { return pos_; }

  void refill() {
    while (bits_ <= 56) {
      std::uint64_t b = 0;
      if (!marker_ && pos_ < data_.size()) {
        b = data_[pos_];
        if (b == 0xFF) {
          const std::uint8_t next = pos_ + 1 < data_.size() ? data_[pos_ + 1] : 0xD9;
          if (next == 0x00) {
            pos_ += 2;
          } else {
            marker_ = true;
            b = 0;
            ++pad_bytes_;
          }
        } else {
          ++pos_;
        }
      } else {
        marker_ = true;
        ++pad_bytes_;
      }
      acc_ |= b << (56 - bits_);
      bits_ += 8;
    }
  }

  std::uint32_t peek(int n) const noexcept { return static_cast<std::uint32_t>(acc_ >> (64 - n)); }
  void consume(int n) noexcept {
    acc_ <<= n;
    bits_ -= n;
  }

  int get_bits(int n) {
    if (n == 0) return 0;
    if (bits_ < n) refill();
    const int v = static_cast<int>(peek(n));
    consume(n);
    return v;
  }

  int get_bit() { return get_bits(1); }

  int decode(const HuffTable& t) {
    if (bits_ < 16) refill();
    const std::uint16_t e = t.fast[peek(9)];
    if (e != 0) {
      consume(e >> 8);
      return e & 0xFF;
    }
    const std::int32_t code16 = static_cast<std::int32_t>(peek(16));
    for (int l = 10; l <= 16; ++l) {
      const std::int32_t code = code16 >> (16 - l);
      if (code <= t.maxcode[l]) {
        consume(l);
        return t.vals[static_cast<std::size_t>(code + t.valoffset[l]) & 0xFF];
      }
    }
    throw DecodeError("invalid Huffman code", pos_);
  }

  // Throws when the decoder has consumed bits that were never in the stream.
  void check_overrun() const {
    if (pad_bytes_ * 8 > bits_) throw DecodeError("entropy-coded data ends prematurely", pos_);
  }

  // Discards buffered bits and steps over the next RSTn marker.
  void restart(int expected) {
    acc_ = 0;
    bits_ = 0;
    pad_bytes_ = 0;
    marker_ = false;
    while (pos_ + 1 < data_.size() &&
           !(data_[pos_] == 0xFF && data_[pos_ + 1] != 0x00 && data_[pos_ + 1] != 0xFF)) {
      ++pos_;
    }
    if (pos_ + 1 >= data_.size()) throw DecodeError("missing restart marker", pos_);
    if (data_[pos_ + 1] != 0xD0 + expected) throw DecodeError("unexpected restart marker", pos_);
    pos_ += 2;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_;
  std::uint64_t acc_ = 0;
  int bits_ = 0;
  int pad_bytes_ = 0;
  bool marker_ = false;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> data) : data_(data) {}

  JpegInfo info() {
    parse_until_scan();
    return frame_info();
  }

  Decoded decode(const CropRect* rect) {
    parse_until_scan();
    const CropRect full{0, 0, width_, height_};
    if (rect != nullptr && !rect_fits(*rect, width_, height_)) {
      throw RangeError("crop rect (" + std::to_string(rect->x) + "," + std::to_string(rect->y) + "," +
                       std::to_string(rect->w) + "," + std::to_string(rect->h) +
                       ") outside " + std::to_string(width_) + "x" + std::to_string(height_) + " image");
    }
    const CropRect region = rect != nullptr ? *rect : full;
    if (!progressive_ && scan_.ns == ncomp_) return decode_streaming(region);

    Decoded out = decode_buffered();
    if (rect != nullptr) {
      out.stats.fallback_full = true;
      if (region != full) out.image = crop(out.image, region);
    }
    return out;
  }

 private:
  std::uint8_t byte_at(std::size_t p) const {
    if (p >= data_.size()) throw DecodeError("unexpected end of data", p);
    return data_[p];
  }
  int u16_at(std::size_t p) const { return (byte_at(p) << 8) | byte_at(p + 1); }

  // Returns the marker code and leaves pos_ after it.
  int next_marker() {
    while (true) {
      if (pos_ + 1 >= data_.size()) throw DecodeError("unexpected end of data", pos_);
      if (data_[pos_] != 0xFF) {
        ++pos_;  // tolerate garbage between segments
        continue;
      }
      std::size_t p = pos_ + 1;
      while (p < data_.size() && data_[p] == 0xFF) ++p;
      const int m = byte_at(p);
      pos_ = p + 1;
      if (m != 0x00) return m;
    }
  }

  void parse_until_scan() {
    if (parsed_) return;
    pos_ = 0;
    if (u16_at(0) != 0xFFD8) throw DecodeError("missing SOI marker", 0);
    pos_ = 2;
    while (true) {
      const std::size_t marker_pos = pos_;
      const int m = next_marker();
      if (m == 0xDA) {
        if (!have_frame_) throw DecodeError("scan before frame header", marker_pos);
        read_scan_header();
        parsed_ = true;
        return;
      }
      if (m == 0xD9) throw DecodeError("no image data before EOI", marker_pos);
      handle_segment(m, marker_pos);
    }
  }

  void handle_segment(int m, std::size_t marker_pos) {
    if (m >= 0xD0 && m <= 0xD7) return;  // stray RST, no payload
    const int len = u16_at(pos_);
    if (len < 2) throw DecodeError("bad segment length", pos_);
    const std::size_t seg = pos_ + 2;
    const std::size_t end = pos_ + static_cast<std::size_t>(len);
    if (end > data_.size()) throw DecodeError("segment overruns data", pos_);
    switch (m) {
      case 0xC0:
      case 0xC1:
      case 0xC2:
        read_frame(seg, end, m == 0xC2);
        break;
      case 0xC4:
        read_dht(seg, end);
        break;
      case 0xDB:
        read_dqt(seg, end);
        break;
      case 0xDD:
        if (len != 4) throw DecodeError("bad DRI length", pos_);
        restart_interval_ = u16_at(seg);
        break;
      case 0xEE:
        if (len >= 14 && std::memcmp(data_.data() + seg, "Adobe", 5) == 0) {
          adobe_transform_ = byte_at(seg + 11);
        }
        break;
      case 0xC3:
      case 0xC5:
      case 0xC6:
      case 0xC7:
      case 0xC9:
      case 0xCA:
      case 0xCB:
      case 0xCD:
      case 0xCE:
      case 0xCF:
        throw DecodeError("unsupported JPEG process (lossless, hierarchical or arithmetic)", marker_pos);
      default:
        break;  // APPn, COM and friends
    }
    pos_ = end;
  }

  void read_frame(std::size_t p, std::size_t end, bool progressive) {
    if (have_frame_) throw DecodeError("duplicate frame header", p);
    if (end - p < 6) throw DecodeError("short frame header", p);
    if (byte_at(p) != 8) throw DecodeError("only 8-bit samples are supported", p);
    height_ = u16_at(p + 1);
    width_ = u16_at(p + 3);
    ncomp_ = byte_at(p + 5);
    if (width_ == 0 || height_ == 0) throw DecodeError("zero image dimension", p);
    if (ncomp_ != 1 && ncomp_ != 3) throw DecodeError("only 1 or 3 components are supported", p);
    if (end - p < 6 + 3 * static_cast<std::size_t>(ncomp_)) throw DecodeError("short frame header", p);
    progressive_ = progressive;
    hmax_ = vmax_ = 1;
    for (int i = 0; i < ncomp_; ++i) {
      Component& c = comps_[i];
      const std::size_t q = p + 6 + 3 * static_cast<std::size_t>(i);
      c.id = byte_at(q);
      c.h = byte_at(q + 1) >> 4;
      c.v = byte_at(q + 1) & 15;
      c.tq = byte_at(q + 2);
      if (c.h < 1 || c.h > 4 || c.v < 1 || c.v > 4 || c.tq > 3) {
        throw DecodeError("bad component parameters", q);
      }
      if (ncomp_ == 1) c.h = c.v = 1;
      hmax_ = std::max(hmax_, c.h);
      vmax_ = std::max(vmax_, c.v);
    }
    int blocks = 0;
    for (int i = 0; i < ncomp_; ++i) {
      const Component& c = comps_[i];
      if (hmax_ % c.h != 0 || vmax_ % c.v != 0) {
        throw DecodeError("fractional chroma sampling is not supported", p);
      }
      blocks += c.h * c.v;
    }
    if (blocks > kMaxBlocksPerMcu) throw DecodeError("too many blocks per MCU", p);
    mcu_w_ = 8 * hmax_;
    mcu_h_ = 8 * vmax_;
    mcus_per_row_ = (width_ + mcu_w_ - 1) / mcu_w_;
    mcu_rows_ = (height_ + mcu_h_ - 1) / mcu_h_;
    for (int i = 0; i < ncomp_; ++i) {
      Component& c = comps_[i];
      const int cw = (width_ * c.h + hmax_ - 1) / hmax_;
      const int ch = (height_ * c.v + vmax_ - 1) / vmax_;
      c.width_blocks = (cw + 7) / 8;
      c.height_blocks = (ch + 7) / 8;
      c.padded_bw = mcus_per_row_ * c.h;
      c.padded_bh = mcu_rows_ * c.v;
    }
    have_frame_ = true;
  }

  void read_dht(std::size_t p, std::size_t end) {
    while (p < end) {
      const int tc = byte_at(p) >> 4;
      const int th = byte_at(p) & 15;
      if (tc > 1 || th > 3) throw DecodeError("bad Huffman table id", p);
      std::array<std::uint8_t, 16> counts{};
      int total = 0;
      for (int i = 0; i < 16; ++i) {
        counts[i] = byte_at(p + 1 + i);
        total += counts[i];
      }
      if (total > 256 || p + 17 + total > end) throw DecodeError("bad Huffman table", p);
      HuffTable& t = (tc == 0 ? dc_tables_ : ac_tables_)[th];
      t = HuffTable{};
      for (int i = 0; i < total; ++i) t.vals[i] = byte_at(p + 17 + i);
      int code = 0;
      int k = 0;
      for (int l = 1; l <= 16; ++l) {
        t.valoffset[l] = k - code;
        for (int i = 0; i < counts[l - 1]; ++i) {
          if (l <= 9) {
            const int shift = 9 - l;
            const int base = code << shift;
            for (int j = 0; j < (1 << shift); ++j) {
              t.fast[base + j] = static_cast<std::uint16_t>((l << 8) | t.vals[k]);
            }
          }
          ++code;
          ++k;
        }
        if (code > (1 << l)) throw DecodeError("bad Huffman code lengths", p);
        t.maxcode[l] = counts[l - 1] ? code - 1 : -1;
        code <<= 1;
      }
      t.maxcode[17] = INT_MAX;
      t.present = true;
      p += 17 + static_cast<std::size_t>(total);
    }
  }

  void read_dqt(std::size_t p, std::size_t end) {
    while (p < end) {
      const int pq = byte_at(p) >> 4;
      const int tq = byte_at(p) & 15;
      if (pq > 1 || tq > 3) throw DecodeError("bad quantization table id", p);
      QuantTable& t = quant_[tq];
      for (int i = 0; i < 64; ++i) {
        const int v = pq == 0 ? byte_at(p + 1 + i) : u16_at(p + 1 + 2 * static_cast<std::size_t>(i));
        t.q[kNaturalOrder[i]] = static_cast<std::uint16_t>(v);
      }
      t.present = true;
      p += 1 + 64 * static_cast<std::size_t>(pq + 1);
    }
  }

  void read_scan_header() {
    const std::size_t p = pos_;
    const int len = u16_at(p);
    const std::size_t end = p + static_cast<std::size_t>(len);
    if (end > data_.size()) throw DecodeError("scan header overruns data", p);
    ScanHeader s;
    s.ns = byte_at(p + 2);
    if (s.ns < 1 || s.ns > ncomp_ || len != 6 + 2 * s.ns) throw DecodeError("bad scan header", p);
    for (int i = 0; i < s.ns; ++i) {
      const std::size_t q = p + 3 + 2 * static_cast<std::size_t>(i);
      const int id = byte_at(q);
      int idx = -1;
      for (int c = 0; c < ncomp_; ++c) {
        if (comps_[c].id == id) idx = c;
      }
      if (idx < 0) throw DecodeError("scan references unknown component", q);
      s.comp[i] = idx;
      comps_[idx].td = byte_at(q + 1) >> 4;
      comps_[idx].ta = byte_at(q + 1) & 15;
      if (comps_[idx].td > 3 || comps_[idx].ta > 3) throw DecodeError("bad table selector", q);
    }
    const std::size_t t = p + 3 + 2 * static_cast<std::size_t>(s.ns);
    s.ss = byte_at(t);
    s.se = byte_at(t + 1);
    s.ah = byte_at(t + 2) >> 4;
    s.al = byte_at(t + 2) & 15;
    if (progressive_) {
      const bool dc = s.ss == 0;
      if ((dc && s.se != 0) || (!dc && (s.se < s.ss || s.se > 63 || s.ns != 1)) || s.al > 13) {
        throw DecodeError("bad progressive scan parameters", t);
      }
    } else if (s.ss != 0 || s.se != 63 || s.ah != 0 || s.al != 0) {
      throw DecodeError("bad sequential scan parameters", t);
    }
    int blocks = 0;
    for (int i = 0; i < s.ns; ++i) blocks += comps_[s.comp[i]].h * comps_[s.comp[i]].v;
    if (s.ns > 1 && blocks > kMaxBlocksPerMcu) throw DecodeError("too many blocks per MCU", p);

    for (int i = 0; i < s.ns; ++i) {
      Component& c = comps_[s.comp[i]];
      if (!c.quant_latched) {
        if (!quant_[c.tq].present) throw DecodeError("missing quantization table", p);
        c.quant = quant_[c.tq].q;
        c.quant_latched = true;
      }
      const bool needs_dc = !progressive_ || (s.ss == 0 && s.ah == 0);
      const bool needs_ac = !progressive_ || s.ss != 0;
      if (needs_dc && !dc_tables_[c.td].present) throw DecodeError("missing DC Huffman table", p);
      if (needs_ac && !ac_tables_[c.ta].present) throw DecodeError("missing AC Huffman table", p);
      c.dc_pred = 0;
    }
    scan_ = s;
    pos_ = end;
  }

  JpegInfo frame_info() const {
    JpegInfo info;
    info.width = width_;
    info.height = height_;
    info.components = ncomp_;
    info.progressive = progressive_;
    info.mcu_width = mcu_w_;
    info.mcu_height = mcu_h_;
    info.mcus_per_row = mcus_per_row_;
    info.mcu_rows = mcu_rows_;
    return info;
  }

  // Sequential block decode. `out` (natural order, pre-zeroed) may be null,
  // in which case the coefficients are consumed and dropped.
  void decode_block(BitReader& br, Component& c, std::int16_t* out) {
    const HuffTable& dc = dc_tables_[c.td];
    const HuffTable& ac = ac_tables_[c.ta];
    const int t = br.decode(dc);
    if (t > 11) throw DecodeError("bad DC magnitude category", br.position());
    const int diff = t ? extend(br.get_bits(t), t) : 0;
    c.dc_pred += diff;
    if (out != nullptr) out[0] = static_cast<std::int16_t>(c.dc_pred);
    for (int k = 1; k < 64;) {
      const int rs = br.decode(ac);
      const int r = rs >> 4;
      const int s = rs & 15;
      if (s != 0) {
        k += r;
        const int v = extend(br.get_bits(s), s);
        if (out != nullptr) out[kNaturalOrder[std::min(k, 79)]] = static_cast<std::int16_t>(v);
        ++k;
      } else {
        if (r != 15) break;
        k += 16;
      }
    }
  }

  // IDCT + upsample + colour-convert one MCU, writing the part of it inside
  // `region` to `dst` (whose origin is the region's top-left corner).
  void reconstruct_mcu(int mx, int my, const std::array<const std::int16_t*, kMaxBlocksPerMcu>& blocks,
                       const CropRect& region, RgbImage& dst) {
    const int stride = mcu_w_;
    int b = 0;
    for (int ci = 0; ci < ncomp_; ++ci) {
      const Component& c = comps_[ci];
      std::uint8_t* plane = planes_[ci].data();
      for (int by = 0; by < c.v; ++by) {
        for (int bx = 0; bx < c.h; ++bx) {
          idct_islow(blocks[b++], c.quant.data(), plane + by * 8 * stride + bx * 8,
                     static_cast<std::size_t>(stride));
        }
      }
    }

    const int ox = mx * mcu_w_;
    const int oy = my * mcu_h_;
    const int x0 = std::max(region.x, ox);
    const int x1 = std::min({region.x + region.w, ox + mcu_w_, width_});
    const int y0 = std::max(region.y, oy);
    const int y1 = std::min({region.y + region.h, oy + mcu_h_, height_});
    if (x0 >= x1 || y0 >= y1) return;

    const ColorTables& ct = color_tables();
    const bool ycc = ncomp_ == 3 && adobe_transform_ != 0;
    for (int y = y0; y < y1; ++y) {
      const int ly = y - oy;
      std::uint8_t* o = dst.row(y - region.y) + static_cast<std::size_t>(x0 - region.x) * 3;
      if (ncomp_ == 1) {
        const std::uint8_t* yp = planes_[0].data() + ly * stride;
        for (int x = x0; x < x1; ++x, o += 3) {
          const std::uint8_t v = yp[x - ox];
          o[0] = o[1] = o[2] = v;
        }
        continue;
      }
      const std::uint8_t* p0 = planes_[0].data() + (ly * comps_[0].v / vmax_) * stride;
      const std::uint8_t* p1 = planes_[1].data() + (ly * comps_[1].v / vmax_) * stride;
      const std::uint8_t* p2 = planes_[2].data() + (ly * comps_[2].v / vmax_) * stride;
      for (int x = x0; x < x1; ++x, o += 3) {
        const int lx = x - ox;
        const int yv = p0[xmap_[0][lx]];
        const int cb = p1[xmap_[1][lx]];
        const int cr = p2[xmap_[2][lx]];
        if (ycc) {
          o[0] = clamp_u8(yv + ct.cr_r[cr]);
          o[1] = clamp_u8(yv + static_cast<int>((ct.cb_g[cb] + ct.cr_g[cr]) >> 16));
          o[2] = clamp_u8(yv + ct.cb_b[cb]);
        } else {
          o[0] = static_cast<std::uint8_t>(yv);
          o[1] = static_cast<std::uint8_t>(cb);
          o[2] = static_cast<std::uint8_t>(cr);
        }
      }
    }
  }

  void prepare_reconstruction() {
    for (int ci = 0; ci < ncomp_; ++ci) {
      planes_[ci].assign(static_cast<std::size_t>(mcu_w_) * mcu_h_, 0);
      xmap_[ci].resize(static_cast<std::size_t>(mcu_w_));
      for (int lx = 0; lx < mcu_w_; ++lx) xmap_[ci][lx] = lx * comps_[ci].h / hmax_;
    }
  }

  std::uint64_t total_mcus() const {
    return static_cast<std::uint64_t>(mcus_per_row_) * static_cast<std::uint64_t>(mcu_rows_);
  }

  Decoded decode_streaming(const CropRect& region) {
    prepare_reconstruction();
    Decoded out;
    out.image = RgbImage(region.w, region.h);
    out.stats.mcus_total = total_mcus();

    const int row_first = region.y / mcu_h_;
    const int row_last = (region.y + region.h - 1) / mcu_h_;
    const int col_first = region.x / mcu_w_;
    const int col_last = (region.x + region.w - 1) / mcu_w_;

    alignas(64) std::array<std::int16_t, kMaxBlocksPerMcu * 64> scratch{};
    std::array<const std::int16_t*, kMaxBlocksPerMcu> ptrs{};
    for (int b = 0; b < kMaxBlocksPerMcu; ++b) ptrs[b] = scratch.data() + b * 64;
    // Components in MCU order follow the scan's component order; the
    // reconstruction expects frame order.
    std::array<int, kMaxBlocksPerMcu> block_slot{};
    {
      std::array<int, kMaxComponents> first{};
      int acc = 0;
      for (int ci = 0; ci < ncomp_; ++ci) {
        first[ci] = acc;
        acc += comps_[ci].h * comps_[ci].v;
      }
      int b = 0;
      for (int i = 0; i < scan_.ns; ++i) {
        const Component& c = comps_[scan_.comp[i]];
        for (int k = 0; k < c.h * c.v; ++k) block_slot[b++] = first[scan_.comp[i]] + k;
      }
    }

    BitReader br(data_, pos_);
    int restarts_left = restart_interval_;
    int next_rst = 0;
    for (int my = 0; my <= row_last; ++my) {
      const bool row_needed = my >= row_first;
      for (int mx = 0; mx < mcus_per_row_; ++mx) {
        if (restart_interval_ != 0) {
          if (restarts_left == 0) {
            br.restart(next_rst);
            next_rst = (next_rst + 1) & 7;
            restarts_left = restart_interval_;
            for (int ci = 0; ci < ncomp_; ++ci) comps_[ci].dc_pred = 0;
          }
          --restarts_left;
        }
        const bool need = row_needed && mx >= col_first && mx <= col_last;
        if (need) std::fill(scratch.begin(), scratch.end(), std::int16_t{0});
        int b = 0;
        for (int i = 0; i < scan_.ns; ++i) {
          Component& c = comps_[scan_.comp[i]];
          for (int k = 0; k < c.h * c.v; ++k, ++b) {
            decode_block(br, c, need ? scratch.data() + block_slot[b] * 64 : nullptr);
          }
        }
        ++out.stats.mcus_entropy_decoded;
        if (need) {
          reconstruct_mcu(mx, my, ptrs, region, out.image);
          ++out.stats.mcus_reconstructed;
        }
      }
      br.check_overrun();
    }
    return out;
  }

  void alloc_coefficients() {
    for (int ci = 0; ci < ncomp_; ++ci) {
      Component& c = comps_[ci];
      c.coeffs.assign(static_cast<std::size_t>(c.padded_bw) * c.padded_bh * 64, 0);
    }
  }

  void decode_buffered_block(BitReader& br, Component& c, std::int16_t* blk, int& eobrun) {
    const ScanHeader& s = scan_;
    if (!progressive_) {
      std::fill(blk, blk + 64, std::int16_t{0});
      decode_block(br, c, blk);
      return;
    }
    if (s.ss == 0) {
      if (s.ah == 0) {
        const int t = br.decode(dc_tables_[c.td]);
        if (t > 11) throw DecodeError("bad DC magnitude category", br.position());
        c.dc_pred += t ? extend(br.get_bits(t), t) : 0;
        blk[0] = static_cast<std::int16_t>(c.dc_pred * (1 << s.al));
      } else if (br.get_bit()) {
        blk[0] = static_cast<std::int16_t>(blk[0] | (1 << s.al));
      }
      return;
    }
    const HuffTable& ac = ac_tables_[c.ta];
    if (s.ah == 0) {
      if (eobrun > 0) {
        --eobrun;
        return;
      }
      for (int k = s.ss; k <= s.se; ++k) {
        const int rs = br.decode(ac);
        const int r = rs >> 4;
        const int sz = rs & 15;
        if (sz != 0) {
          k += r;
          if (k > 63) throw DecodeError("AC coefficient index out of range", br.position());
          blk[kNaturalOrder[k]] = static_cast<std::int16_t>(extend(br.get_bits(sz), sz) * (1 << s.al));
        } else {
          if (r < 15) {
            eobrun = (1 << r) - 1;
            if (r != 0) eobrun += br.get_bits(r);
            break;
          }
          k += 15;
        }
      }
      return;
    }

    // AC successive approximation refinement.
    const int p1 = 1 << s.al;
    const int m1 = -1 * (1 << s.al);
    int k = s.ss;
    auto refine = [&](std::int16_t& coef) {
      if (br.get_bit() && (coef & p1) == 0) {
        coef = static_cast<std::int16_t>(coef >= 0 ? coef + p1 : coef + m1);
      }
    };
    if (eobrun == 0) {
      for (; k <= s.se; ++k) {
        const int rs = br.decode(ac);
        int r = rs >> 4;
        int sz = rs & 15;
        int value = 0;
        if (sz != 0) {
          if (sz != 1) throw DecodeError("bad refinement magnitude", br.position());
          value = br.get_bit() ? p1 : m1;
        } else if (r != 15) {
          eobrun = 1 << r;
          if (r != 0) eobrun += br.get_bits(r);
          break;
        }
        do {
          std::int16_t& coef = blk[kNaturalOrder[k]];
          if (coef != 0) {
            refine(coef);
          } else {
            if (--r < 0) break;
          }
          ++k;
        } while (k <= s.se);
        if (value != 0 && k <= 63) blk[kNaturalOrder[k]] = static_cast<std::int16_t>(value);
      }
    }
    if (eobrun > 0) {
      for (; k <= s.se; ++k) {
        std::int16_t& coef = blk[kNaturalOrder[k]];
        if (coef != 0) refine(coef);
      }
      --eobrun;
    }
  }

  void decode_scan_into_buffer() {
    BitReader br(data_, pos_);
    int eobrun = 0;
    int restarts_left = restart_interval_;
    int next_rst = 0;
    auto maybe_restart = [&] {
      if (restart_interval_ == 0) return;
      if (restarts_left == 0) {
        br.restart(next_rst);
        next_rst = (next_rst + 1) & 7;
        restarts_left = restart_interval_;
        eobrun = 0;
        for (int ci = 0; ci < ncomp_; ++ci) comps_[ci].dc_pred = 0;
      }
      --restarts_left;
    };

    if (scan_.ns == 1) {
      Component& c = comps_[scan_.comp[0]];
      for (int by = 0; by < c.height_blocks; ++by) {
        for (int bx = 0; bx < c.width_blocks; ++bx) {
          maybe_restart();
          decode_buffered_block(br, c, c.block(bx, by), eobrun);
        }
        br.check_overrun();
      }
    } else {
      for (int my = 0; my < mcu_rows_; ++my) {
        for (int mx = 0; mx < mcus_per_row_; ++mx) {
          maybe_restart();
          for (int i = 0; i < scan_.ns; ++i) {
            Component& c = comps_[scan_.comp[i]];
            for (int by = 0; by < c.v; ++by) {
              for (int bx = 0; bx < c.h; ++bx) {
                decode_buffered_block(br, c, c.block(mx * c.h + bx, my * c.v + by), eobrun);
              }
            }
          }
        }
        br.check_overrun();
      }
    }
    pos_ = br.position();
  }

  Decoded decode_buffered() {
    alloc_coefficients();
    while (true) {
      decode_scan_into_buffer();
      // Find the next scan, if any.
      bool more = false;
      while (pos_ + 1 < data_.size()) {
        const std::size_t marker_pos = pos_;
        const int m = next_marker();
        if (m == 0xD9) break;
        if (m == 0xDA) {
          read_scan_header();
          more = true;
          break;
        }
        handle_segment(m, marker_pos);
      }
      if (!more) break;
    }

    prepare_reconstruction();
    Decoded out;
    out.image = RgbImage(width_, height_);
    const CropRect full{0, 0, width_, height_};
    std::array<const std::int16_t*, kMaxBlocksPerMcu> ptrs{};
    for (int my = 0; my < mcu_rows_; ++my) {
      for (int mx = 0; mx < mcus_per_row_; ++mx) {
        int b = 0;
        for (int ci = 0; ci < ncomp_; ++ci) {
          Component& c = comps_[ci];
          for (int by = 0; by < c.v; ++by) {
            for (int bx = 0; bx < c.h; ++bx) ptrs[b++] = c.block(mx * c.h + bx, my * c.v + by);
          }
        }
        reconstruct_mcu(mx, my, ptrs, full, out.image);
      }
    }
    out.stats.mcus_total = total_mcus();
    out.stats.mcus_entropy_decoded = total_mcus();
    out.stats.mcus_reconstructed = total_mcus();
    return out;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  bool parsed_ = false;
  bool have_frame_ = false;
  bool progressive_ = false;
  int width_ = 0;
  int height_ = 0;
  int ncomp_ = 0;
  int hmax_ = 1;
  int vmax_ = 1;
  int mcu_w_ = 8;
  int mcu_h_ = 8;
  int mcus_per_row_ = 0;
  int mcu_rows_ = 0;
  int restart_interval_ = 0;
  int adobe_transform_ = -1;
  std::array<Component, kMaxComponents> comps_{};
  std::array<HuffTable, 4> dc_tables_{};
  std::array<HuffTable, 4> ac_tables_{};
  std::array<QuantTable, 4> quant_{};
  ScanHeader scan_;
  std::array<std::vector<std::uint8_t>, kMaxComponents> planes_;
  std::array<std::vector<int>, kMaxComponents> xmap_;
};

}  // namespace

JpegInfo read_info(std::span<const std::uint8_t> bytes) { return Decoder(bytes).info(); }

Decoded decode_full(std::span<const std::uint8_t> bytes) { return Decoder(bytes).decode(nullptr); }

Decoded decode_crop(std::span<const std::uint8_t> bytes, const CropRect& rect) {
  return Decoder(bytes).decode(&rect);
}

}  // namespace essl::jpeg
