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

// Baseline sequential 4:2:0 encoder used by the dataset builder.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string>

#include "essl/error.hpp"
#include "essl/jpeg.hpp"
#include "jpeg/tables.hpp"

namespace essl::jpeg {
namespace {

using namespace detail;

struct HuffCodes {
  std::array<std::uint16_t, 256> code{};
  std::array<std::uint8_t, 256> size{};
};

template <std::size_t N>
HuffCodes make_codes(const std::array<std::uint8_t, 16>& bits, const std::array<std::uint8_t, N>& vals) {
  HuffCodes out;
  int code = 0;
  std::size_t k = 0;
  for (int l = 1; l <= 16; ++l) {
    for (int i = 0; i < bits[l - 1]; ++i, ++k) {
      out.code[vals[k]] = static_cast<std::uint16_t>(code++);
      out.size[vals[k]] = static_cast<std::uint8_t>(l);
    }
    code <<= 1;
  }
  return out;
}

struct CodeBook {
  HuffCodes dc_luma = make_codes(kDcLumaBits, kDcLumaVals);
  HuffCodes dc_chroma = make_codes(kDcChromaBits, kDcChromaVals);
  HuffCodes ac_luma = make_codes(kAcLumaBits, kAcLumaVals);
  HuffCodes ac_chroma = make_codes(kAcChromaBits, kAcChromaVals);
};

const CodeBook& codebook() {
  static const CodeBook book;
  return book;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t bits, int size) {
    acc_ = (acc_ << size) | (bits & ((1u << size) - 1));
    n_ += size;
    while (n_ >= 8) {
      const auto b = static_cast<std::uint8_t>(acc_ >> (n_ - 8));
      out_.push_back(b);
      if (b == 0xFF) out_.push_back(0x00);
      n_ -= 8;
    }
    acc_ &= (1u << n_) - 1;
  }

  // Pads the final partial byte with one bits.
  void flush() {
    if (n_ > 0) put((1u << (8 - n_)) - 1, 8 - n_);
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint32_t acc_ = 0;
  int n_ = 0;
};

int magnitude_bits(int v) {
  v = std::abs(v);
  int n = 0;
  while (v != 0) {
    ++n;
    v >>= 1;
  }
  return n;
}

// Accurate integer forward DCT; output is scaled up by 8.
void fdct_islow(std::int32_t* data) {
  for (int row = 0; row < 8; ++row) {
    std::int32_t* d = data + row * 8;
    const std::int64_t tmp0 = d[0] + d[7];
    std::int64_t tmp7 = d[0] - d[7];
    const std::int64_t tmp1 = d[1] + d[6];
    std::int64_t tmp6 = d[1] - d[6];
    const std::int64_t tmp2 = d[2] + d[5];
    std::int64_t tmp5 = d[2] - d[5];
    const std::int64_t tmp3 = d[3] + d[4];
    std::int64_t tmp4 = d[3] - d[4];

    const std::int64_t tmp10 = tmp0 + tmp3;
    const std::int64_t tmp13 = tmp0 - tmp3;
    const std::int64_t tmp11 = tmp1 + tmp2;
    const std::int64_t tmp12 = tmp1 - tmp2;
    d[0] = static_cast<std::int32_t>((tmp10 + tmp11) * (1 << kPass1Bits));
    d[4] = static_cast<std::int32_t>((tmp10 - tmp11) * (1 << kPass1Bits));
    std::int64_t z1 = (tmp12 + tmp13) * kFix0_541196100;
    d[2] = static_cast<std::int32_t>(descale(z1 + tmp13 * kFix0_765366865, kConstBits - kPass1Bits));
    d[6] = static_cast<std::int32_t>(descale(z1 + tmp12 * (-kFix1_847759065), kConstBits - kPass1Bits));

    z1 = tmp4 + tmp7;
    std::int64_t z2 = tmp5 + tmp6;
    std::int64_t z3 = tmp4 + tmp6;
    std::int64_t z4 = tmp5 + tmp7;
    const std::int64_t z5 = (z3 + z4) * kFix1_175875602;
    tmp4 *= kFix0_298631336;
    tmp5 *= kFix2_053119869;
    tmp6 *= kFix3_072711026;
    tmp7 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 *= -kFix1_961570560;
    z4 *= -kFix0_390180644;
    z3 += z5;
    z4 += z5;
    d[7] = static_cast<std::int32_t>(descale(tmp4 + z1 + z3, kConstBits - kPass1Bits));
    d[5] = static_cast<std::int32_t>(descale(tmp5 + z2 + z4, kConstBits - kPass1Bits));
    d[3] = static_cast<std::int32_t>(descale(tmp6 + z2 + z3, kConstBits - kPass1Bits));
    d[1] = static_cast<std::int32_t>(descale(tmp7 + z1 + z4, kConstBits - kPass1Bits));
  }
  for (int col = 0; col < 8; ++col) {
    std::int32_t* d = data + col;
    const std::int64_t tmp0 = d[0] + d[56];
    std::int64_t tmp7 = d[0] - d[56];
    const std::int64_t tmp1 = d[8] + d[48];
    std::int64_t tmp6 = d[8] - d[48];
    const std::int64_t tmp2 = d[16] + d[40];
    std::int64_t tmp5 = d[16] - d[40];
    const std::int64_t tmp3 = d[24] + d[32];
    std::int64_t tmp4 = d[24] - d[32];

    const std::int64_t tmp10 = tmp0 + tmp3;
    const std::int64_t tmp13 = tmp0 - tmp3;
    const std::int64_t tmp11 = tmp1 + tmp2;
    const std::int64_t tmp12 = tmp1 - tmp2;
    d[0] = static_cast<std::int32_t>(descale(tmp10 + tmp11, kPass1Bits));
    d[32] = static_cast<std::int32_t>(descale(tmp10 - tmp11, kPass1Bits));
    std::int64_t z1 = (tmp12 + tmp13) * kFix0_541196100;
    d[16] = static_cast<std::int32_t>(descale(z1 + tmp13 * kFix0_765366865, kConstBits + kPass1Bits));
    d[48] = static_cast<std::int32_t>(descale(z1 + tmp12 * (-kFix1_847759065), kConstBits + kPass1Bits));

    z1 = tmp4 + tmp7;
    std::int64_t z2 = tmp5 + tmp6;
    std::int64_t z3 = tmp4 + tmp6;
    std::int64_t z4 = tmp5 + tmp7;
    const std::int64_t z5 = (z3 + z4) * kFix1_175875602;
    tmp4 *= kFix0_298631336;
    tmp5 *= kFix2_053119869;
    tmp6 *= kFix3_072711026;
    tmp7 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 *= -kFix1_961570560;
    z4 *= -kFix0_390180644;
    z3 += z5;
    z4 += z5;
    d[56] = static_cast<std::int32_t>(descale(tmp4 + z1 + z3, kConstBits + kPass1Bits));
    d[40] = static_cast<std::int32_t>(descale(tmp5 + z2 + z4, kConstBits + kPass1Bits));
    d[24] = static_cast<std::int32_t>(descale(tmp6 + z2 + z3, kConstBits + kPass1Bits));
    d[8] = static_cast<std::int32_t>(descale(tmp7 + z1 + z4, kConstBits + kPass1Bits));
  }
}

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
  const std::uint8_t* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
};

class Encoder {
 public:
  Encoder(const RgbImage& image, const EncodeOptions& opt) : image_(image), opt_(opt) {
    luma_q_ = scaled_quant_table(false, opt.quality);
    chroma_q_ = scaled_quant_table(true, opt.quality);
  }

  std::vector<std::uint8_t> run() {
    convert_planes();
    out_.reserve(static_cast<std::size_t>(image_.width()) * image_.height() / 4 + 1024);
    write_headers();
    write_scan();
    out_.push_back(0xFF);
    out_.push_back(0xD9);
    return std::move(out_);
  }

 private:
  void put16(int v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }

  void convert_planes() {
    const int w = image_.width();
    const int h = image_.height();
    const int pw = (w + 15) / 16 * 16;
    const int ph = (h + 15) / 16 * 16;
    y_ = Plane{pw, ph, std::vector<std::uint8_t>(static_cast<std::size_t>(pw) * ph)};
    Plane cb_full{pw, ph, std::vector<std::uint8_t>(static_cast<std::size_t>(pw) * ph)};
    Plane cr_full{pw, ph, std::vector<std::uint8_t>(static_cast<std::size_t>(pw) * ph)};

    constexpr int kScale = 16;
    constexpr std::int32_t kHalf = std::int32_t{1} << (kScale - 1);
    constexpr std::int32_t kOffset = std::int32_t{128} << kScale;
    auto fix = [](double x) { return static_cast<std::int32_t>(x * (1 << kScale) + 0.5); };
    const std::int32_t ry = fix(0.29900), gy = fix(0.58700), by = fix(0.11400);
    const std::int32_t rcb = fix(0.16874), gcb = fix(0.33126), half = fix(0.5);
    const std::int32_t gcr = fix(0.41869), bcr = fix(0.08131);

    for (int y = 0; y < ph; ++y) {
      const std::uint8_t* src = image_.row(std::min(y, h - 1));
      const std::size_t base = static_cast<std::size_t>(y) * pw;
      for (int x = 0; x < pw; ++x) {
        const std::uint8_t* p = src + static_cast<std::size_t>(std::min(x, w - 1)) * 3;
        const std::int32_t r = p[0], g = p[1], b = p[2];
        y_.data[base + x] = static_cast<std::uint8_t>((ry * r + gy * g + by * b + kHalf) >> kScale);
        cb_full.data[base + x] =
            static_cast<std::uint8_t>((-rcb * r - gcb * g + half * b + kOffset + kHalf - 1) >> kScale);
        cr_full.data[base + x] =
            static_cast<std::uint8_t>((half * r - gcr * g - bcr * b + kOffset + kHalf - 1) >> kScale);
      }
    }
    cb_ = downsample(cb_full);
    cr_ = downsample(cr_full);
  }

  static Plane downsample(const Plane& in) {
    Plane out{in.width / 2, in.height / 2, {}};
    out.data.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y) {
      const std::uint8_t* r0 = in.row(2 * y);
      const std::uint8_t* r1 = in.row(2 * y + 1);
      int bias = 1;
      for (int x = 0; x < out.width; ++x) {
        out.data[static_cast<std::size_t>(y) * out.width + x] =
            static_cast<std::uint8_t>((r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1] + bias) >> 2);
        bias ^= 3;
      }
    }
    return out;
  }

  void write_headers() {
    out_.insert(out_.end(), {0xFF, 0xD8});
    // JFIF APP0
    out_.insert(out_.end(), {0xFF, 0xE0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00, 0x01, 0x01, 0x00,
                             0x00, 0x01, 0x00, 0x01, 0x00, 0x00});
    // DQT
    out_.insert(out_.end(), {0xFF, 0xDB});
    put16(2 + 2 * 65);
    for (int t = 0; t < 2; ++t) {
      const auto& q = t == 0 ? luma_q_ : chroma_q_;
      out_.push_back(static_cast<std::uint8_t>(t));
      for (int i = 0; i < 64; ++i) out_.push_back(static_cast<std::uint8_t>(q[kNaturalOrder[i]]));
    }
    // SOF0
    out_.insert(out_.end(), {0xFF, 0xC0});
    put16(17);
    out_.push_back(8);
    put16(image_.height());
    put16(image_.width());
    out_.insert(out_.end(), {3, 1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1});
    // DHT
    out_.insert(out_.end(), {0xFF, 0xC4});
    put16(2 + 4 * 17 + 12 + 12 + 162 + 162);
    auto table = [this](int id, const auto& bits, const auto& vals) {
      out_.push_back(static_cast<std::uint8_t>(id));
      out_.insert(out_.end(), bits.begin(), bits.end());
      out_.insert(out_.end(), vals.begin(), vals.end());
    };
    table(0x00, kDcLumaBits, kDcLumaVals);
    table(0x10, kAcLumaBits, kAcLumaVals);
    table(0x01, kDcChromaBits, kDcChromaVals);
    table(0x11, kAcChromaBits, kAcChromaVals);
    if (opt_.restart_interval > 0) {
      out_.insert(out_.end(), {0xFF, 0xDD, 0x00, 0x04});
      put16(opt_.restart_interval);
    }
    // SOS
    out_.insert(out_.end(), {0xFF, 0xDA, 0x00, 0x0C, 3, 1, 0x00, 2, 0x11, 3, 0x11, 0x00, 0x3F, 0x00});
  }

  void encode_block(BitWriter& bw, const Plane& plane, int bx, int by, const std::vector<std::uint16_t>& q,
                    const HuffCodes& dc, const HuffCodes& ac, int& pred) {
    std::int32_t blk[64];
    for (int y = 0; y < 8; ++y) {
      const std::uint8_t* src = plane.row(by * 8 + y) + bx * 8;
      for (int x = 0; x < 8; ++x) blk[y * 8 + x] = static_cast<std::int32_t>(src[x]) - 128;
    }
    fdct_islow(blk);
    std::int32_t quant[64];
    for (int i = 0; i < 64; ++i) {
      const std::int32_t qval = static_cast<std::int32_t>(q[i]) << 3;
      std::int32_t t = blk[i];
      if (t < 0) {
        t = -t + (qval >> 1);
        t = t >= qval ? t / qval : 0;
        t = -t;
      } else {
        t += qval >> 1;
        t = t >= qval ? t / qval : 0;
      }
      quant[i] = t;
    }

    const int diff = quant[0] - pred;
    pred = quant[0];
    const int cat = magnitude_bits(diff);
    bw.put(dc.code[cat], dc.size[cat]);
    if (cat != 0) bw.put(static_cast<std::uint32_t>(diff < 0 ? diff - 1 : diff), cat);

    int run = 0;
    for (int k = 1; k < 64; ++k) {
      const int v = quant[kNaturalOrder[k]];
      if (v == 0) {
        ++run;
        continue;
      }
      while (run > 15) {
        bw.put(ac.code[0xF0], ac.size[0xF0]);
        run -= 16;
      }
      const int s = magnitude_bits(v);
      const int sym = (run << 4) | s;
      bw.put(ac.code[sym], ac.size[sym]);
      bw.put(static_cast<std::uint32_t>(v < 0 ? v - 1 : v), s);
      run = 0;
    }
    if (run > 0) bw.put(ac.code[0x00], ac.size[0x00]);
  }

  void write_scan() {
    const CodeBook& cb = codebook();
    BitWriter bw(out_);
    const int mcus_x = y_.width / 16;
    const int mcus_y = y_.height / 16;
    int pred_y = 0, pred_cb = 0, pred_cr = 0;
    int count = 0;
    int rst = 0;
    for (int my = 0; my < mcus_y; ++my) {
      for (int mx = 0; mx < mcus_x; ++mx) {
        if (opt_.restart_interval > 0 && count > 0 && count % opt_.restart_interval == 0) {
          bw.flush();
          out_.push_back(0xFF);
          out_.push_back(static_cast<std::uint8_t>(0xD0 + rst));
          rst = (rst + 1) & 7;
          pred_y = pred_cb = pred_cr = 0;
        }
        for (int by = 0; by < 2; ++by) {
          for (int bx = 0; bx < 2; ++bx) {
            encode_block(bw, y_, mx * 2 + bx, my * 2 + by, luma_q_, cb.dc_luma, cb.ac_luma, pred_y);
          }
        }
        encode_block(bw, cb_, mx, my, chroma_q_, cb.dc_chroma, cb.ac_chroma, pred_cb);
        encode_block(bw, cr_, mx, my, chroma_q_, cb.dc_chroma, cb.ac_chroma, pred_cr);
        ++count;
      }
    }
    bw.flush();
  }

  const RgbImage& image_;
  EncodeOptions opt_;
  std::vector<std::uint16_t> luma_q_;
  std::vector<std::uint16_t> chroma_q_;
  Plane y_, cb_, cr_;
  std::vector<std::uint8_t> out_;
};

}  // namespace

std::vector<std::uint16_t> scaled_quant_table(bool chroma, int quality) {
  if (quality < 1 || quality > 100) {
    throw ConfigError("JPEG quality must be in [1, 100], got " + std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - quality * 2;
  const auto& base = chroma ? kChromaQuant : kLumaQuant;
  std::vector<std::uint16_t> out(64);
  for (int i = 0; i < 64; ++i) {
    const long v = (static_cast<long>(base[i]) * scale + 50) / 100;
    out[i] = static_cast<std::uint16_t>(std::clamp(v, 1L, 255L));
  }
  return out;
}

std::vector<std::uint8_t> encode(const RgbImage& image, const EncodeOptions& options) {
  if (image.empty()) throw ConfigError("cannot encode an empty image");
  if (image.width() > 65535 || image.height() > 65535) throw ConfigError("image too large for JPEG");
  if (options.restart_interval < 0 || options.restart_interval > 65535) {
    throw ConfigError("restart interval must be in [0, 65535]");
  }
  return Encoder(image, options).run();
}

}  // namespace essl::jpeg
