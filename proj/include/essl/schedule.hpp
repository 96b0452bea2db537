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


#ifndef ESSL_SCHEDULE_HPP_
#define ESSL_SCHEDULE_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "essl/aug_level.hpp"
#include "essl/cropmath.hpp"

namespace essl::schedule {

/// One stage of a scheme. `span` is the fraction of total epochs it lasts.
struct Stage {
  double span = 1.0;
  int resolution = 224;
  double masking_ratio = 0.0;
  AugLevel aug = AugLevel::Simple;
  cropmath::ScaleBounds bounds;

  friend bool operator==(const Stage&, const Stage&) = default;
};

/// Resolved training parameters for one epoch.
struct StageParams {
  int stage = 0;  // 0-based
  int resolution = 224;
  double masking_ratio = 0.0;
  AugLevel aug = AugLevel::Simple;
  cropmath::ScaleBounds bounds;

  friend bool operator==(const StageParams&, const StageParams&) = default;
};

struct ScheduleScheme {
  std::string name;
  std::vector<Stage> stages;
  int total_epochs = 100;  // default used when a caller does not supply one

  /// Throws ConfigError: empty, non-positive spans, spans not summing to 1
  /// within 1e-9, resolution not a positive multiple of 16, bad ratios/bounds.
  void validate() const;
};

/// Crop bounds used by the pretraining schemes (area fraction 0.2 .. 1).
cropmath::ScaleBounds pretrain_bounds();

/// ft_s1, ft_s1minus, ft_s1plus, ft_s3, pt_s1 .. pt_s6, fixed224, fixed192,
/// fixed160. Throws ConfigError for anything else.
ScheduleScheme builtin_scheme(std::string_view name);
std::vector<std::string> builtin_scheme_names();

/// First epoch of every stage: floor(cumulative span * total_epochs).
/// Entry 0 is always 0. Stages may be empty for very short runs.
std::vector<int> stage_starts(const ScheduleScheme& scheme, int total_epochs);

/// Throws RangeError unless 0 <= epoch < total_epochs.
StageParams params_for_epoch(const ScheduleScheme& scheme, int epoch, int total_epochs);

/// JSON document: {"scheme", "total_epochs", "stages": [...], "epochs": [...]}
/// where "epochs" holds one StageParams row per epoch.
std::string emit_json(const ScheduleScheme& scheme, int total_epochs);

/// CSV with one row per epoch.
std::string emit_csv(const ScheduleScheme& scheme, int total_epochs);

/// CSV with one geometry row per stage (equation and table-convention values).
std::string emit_geometry_csv(const ScheduleScheme& scheme, int patch_size = 16);

struct LoadedSchedule {
  ScheduleScheme scheme;
  int total_epochs = 0;
  std::vector<StageParams> epochs;  // empty if the document had none
};

/// Parses emit_json output, or a custom scheme document holding only
/// "stages" (plus optional "scheme"/"total_epochs"). If "epochs" is present
/// it must agree with the stages. Throws ConfigError with the offending field.
LoadedSchedule load_json(std::string_view text);

}  // namespace essl::schedule

#endif  // ESSL_SCHEDULE_HPP_
