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


#include "essl/cropmath.hpp"

#include <cmath>
#include <string>

#include "essl/error.hpp"

namespace essl::cropmath {

void ScaleBounds::validate() const {
  if (!(sigma_lo > 0.0 && sigma_lo <= sigma_hi && sigma_hi <= 1.0)) {
    throw ConfigError("scale bounds must satisfy 0 < sigma_lo <= sigma_hi <= 1, got (" +
                      std::to_string(sigma_lo) + ", " + std::to_string(sigma_hi) + ")");
  }
}

double expected_perceptual_ratio(const ScaleBounds& b) {
  b.validate();
  const double lo = b.sigma_lo, hi = b.sigma_hi;
  return (2.0 / 3.0) * (lo * lo + lo * hi + hi * hi) / (lo + hi);
}

double expected_apparent_size(double h, const ScaleBounds& b) {
  return h / expected_perceptual_ratio(b);
}

GeometryReport table_geometry(double h, const ScaleBounds& b) {
  GeometryReport r;
  r.h = h;
  r.perceptual_ratio = expected_perceptual_ratio(b);
  r.apparent_size = h / r.perceptual_ratio;
  r.table_ratio = (2.0 / 3.0) * r.perceptual_ratio;
  r.table_apparent = (2.0 / 3.0) * r.apparent_size;
  return r;
}

double masked_perceptual_ratio(double m, int patch, int h) {
  if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("masking ratio must be in [0, 1]");
  if (patch <= 0 || h <= 0 || h % patch != 0) {
    throw ConfigError("patch size " + std::to_string(patch) + " does not divide resolution " +
                      std::to_string(h));
  }
  return m * patch / h;
}

double true_expected_apparent(double h, const ScaleBounds& b) {
  b.validate();
  return 2.0 * h / (b.sigma_lo + b.sigma_hi);
}

McStats mc_estimate_scale_stats(const ScaleBounds& b, double h, std::uint64_t n, SampleRng& rng) {
  b.validate();
  if (n < 10000) throw ConfigError("Monte-Carlo estimate needs at least 10^4 draws");
  const double a_lo = b.area_lo(), a_hi = b.area_hi();
  // Welford; keeps the degenerate case at exactly zero variance.
  double m1 = 0.0, s1 = 0.0, m2 = 0.0, s2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double a = a_lo == a_hi ? a_lo : rng.uniform(a_lo, a_hi);
    const double sigma = std::sqrt(a);
    const double app = h / sigma;
    const double k = static_cast<double>(i + 1);
    const double d1 = sigma - m1;
    m1 += d1 / k;
    s1 += d1 * (sigma - m1);
    const double d2 = app - m2;
    m2 += d2 / k;
    s2 += d2 * (app - m2);
  }
  const double dn = static_cast<double>(n);
  McStats r;
  r.n = n;
  r.mean_sigma = m1;
  r.mean_apparent = m2;
  r.se_sigma = std::sqrt(s1 / (dn - 1.0)) / std::sqrt(dn);
  r.se_apparent = std::sqrt(s2 / (dn - 1.0)) / std::sqrt(dn);
  return r;
}

}  // namespace essl::cropmath
