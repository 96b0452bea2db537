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


#ifndef ESSL_MASKING_HPP_
#define ESSL_MASKING_HPP_

#include <cstdint>
#include <vector>

#include "essl/rng.hpp"
#include "essl/schedule.hpp"

namespace essl::masking {

/// Random patch masking over a (res/patch)^2 token grid.
struct MaskSpec {
  int resolution = 224;
  int patch = 16;
  double ratio = 0.75;

  /// Throws ConfigError if patch does not divide resolution or ratio is
  /// outside [0, 1].
  void validate() const;
  int grid() const noexcept { return resolution / patch; }
  int tokens() const noexcept { return grid() * grid(); }
  /// round(ratio * tokens), halves rounded up.
  int masked_count() const;
};

/// Masked token indices: the first k entries of a uniform random
/// permutation of [0, N), in permutation order.
std::vector<std::int32_t> sample_mask(SampleRng& rng, const MaskSpec& spec);

/// sample_mask at the resolution and ratio the schedule assigns to `epoch`.
std::vector<std::int32_t> mask_for_epoch(SampleRng& rng, const schedule::ScheduleScheme& scheme,
                                         int epoch, int total_epochs, int patch);

}  // namespace essl::masking

#endif  // ESSL_MASKING_HPP_
