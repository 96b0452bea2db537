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


#ifndef ESSL_RNG_HPP_
#define ESSL_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace essl {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream. The key is a hash of (seed, epoch, index,
/// stream); the n-th output is a hash of (key, n). Two streams built from
/// the same tuple produce the same values no matter which thread draws them
/// or in which order samples are processed.
class SampleRng {
 public:
  // Stream tags used by the pipeline; one independent stream per consumer.
  enum Stream : std::uint64_t {
    kCrop = 1,
    kAugment = 2,
    kMask = 3,
    kPermutation = 4,
    kUser = 16,
  };

  constexpr SampleRng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index,
                      std::uint64_t stream = 0) noexcept
      : key_(mix64(mix64(mix64(mix64(seed) ^ epoch) ^ index) ^ stream)) {}

  /// Independent child stream.
  constexpr SampleRng fork(std::uint64_t tag) const noexcept { return SampleRng(key_, tag); }

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n); n must be > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= limit) return r % n;
    }
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  constexpr SampleRng(std::uint64_t parent, std::uint64_t tag) noexcept
      : key_(mix64(parent ^ mix64(tag ^ 0x5bd1e9955bd1e995ULL))) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace essl

#endif  // ESSL_RNG_HPP_
