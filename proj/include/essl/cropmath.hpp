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


#ifndef ESSL_CROPMATH_HPP_
#define ESSL_CROPMATH_HPP_

#include <cstdint>

#include "essl/rng.hpp"

namespace essl::cropmath {

/// Linear-scale crop bounds. The sampled quantity is the area fraction
/// a ~ U[sigma_lo^2, sigma_hi^2]; the linear scale is sigma = sqrt(a).
struct ScaleBounds {
  double sigma_lo = 0.0;
  double sigma_hi = 1.0;

  /// Throws ConfigError unless 0 < sigma_lo <= sigma_hi <= 1.
  void validate() const;
  double area_lo() const noexcept { return sigma_lo * sigma_lo; }
  double area_hi() const noexcept { return sigma_hi * sigma_hi; }

  friend bool operator==(const ScaleBounds&, const ScaleBounds&) = default;
};

/// E[sigma] = (2/3)(s+^3 - s-^3)/(s+^2 - s-^2). Evaluated in the factored
/// form (2/3)(s-^2 + s- s+ + s+^2)/(s- + s+), which is exact at s- = s+.
double expected_perceptual_ratio(const ScaleBounds& b);

/// h / E[sigma] with object-size constant C = 1.
double expected_apparent_size(double h, const ScaleBounds& b);

struct GeometryReport {
  double h = 0.0;
  double perceptual_ratio = 0.0;
  double apparent_size = 0.0;
  /// 2/3 of the two values above; the convention used by published
  /// finetuning-scheme tables.
  double table_ratio = 0.0;
  double table_apparent = 0.0;
};

GeometryReport table_geometry(double h, const ScaleBounds& b);

/// m * p / h. Throws ConfigError if p does not divide h or m is outside [0, 1].
double masked_perceptual_ratio(double m, int patch, int h);

struct McStats {
  std::uint64_t n = 0;
  double mean_sigma = 0.0;
  double se_sigma = 0.0;
  double mean_apparent = 0.0;  // mean of h / sigma
  double se_apparent = 0.0;
};

/// Monte-Carlo estimate of E[sigma] and E[h/sigma] from n draws of
/// a ~ U[sigma_lo^2, sigma_hi^2]. Standard errors are sample std / sqrt(n).
/// Throws ConfigError for n < 10^4.
McStats mc_estimate_scale_stats(const ScaleBounds& b, double h, std::uint64_t n, SampleRng& rng);

/// Exact E[h/sigma] = 2h / (s- + s+), the quantity the Monte-Carlo
/// estimator converges to (differs from expected_apparent_size by Jensen).
double true_expected_apparent(double h, const ScaleBounds& b);

}  // namespace essl::cropmath

#endif  // ESSL_CROPMATH_HPP_
