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


#include "essl/masking.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "essl/error.hpp"

namespace essl::masking {

void MaskSpec::validate() const {
  if (patch <= 0 || resolution <= 0 || resolution % patch != 0) {
    throw ConfigError("patch size " + std::to_string(patch) + " does not divide resolution " +
                      std::to_string(resolution));
  }
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("mask_ratio must be in [0, 1]");
}

int MaskSpec::masked_count() const {
  validate();
  // The epsilon keeps products such as 0.85 * 196 = 166.6 stable and makes
  // exact halves round up even when the product lands just below .5.
  return static_cast<int>(std::floor(ratio * tokens() + 0.5 + 1e-9));
}

std::vector<std::int32_t> sample_mask(SampleRng& rng, const MaskSpec& spec) {
  const int n = spec.tokens();
  const int k = spec.masked_count();
  std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  // Partial Fisher-Yates: position i receives a uniform pick from the rest.
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  perm.resize(static_cast<std::size_t>(k));
  return perm;
}

std::vector<std::int32_t> mask_for_epoch(SampleRng& rng, const schedule::ScheduleScheme& scheme,
                                         int epoch, int total_epochs, int patch) {
  const auto p = schedule::params_for_epoch(scheme, epoch, total_epochs);
  return sample_mask(rng, MaskSpec{p.resolution, patch, p.masking_ratio});
}

}  // namespace essl::masking
