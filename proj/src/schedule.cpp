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


#include "essl/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "essl/error.hpp"

namespace essl::schedule {
namespace {

using json = nlohmann::ordered_json;

// Guards floor() against spans like 0.3 * 10 landing a hair below 3.
constexpr double kBoundaryEps = 1e-9;

Stage make(double span, int res, double m, AugLevel aug, cropmath::ScaleBounds b) {
  return Stage{span, res, m, aug, b};
}

ScheduleScheme finetune(std::string name, AugLevel a0, AugLevel a1, AugLevel a2,
                        double hi0 = 1.0, double hi1 = 1.0) {
  const double lo = 0.28;
  return ScheduleScheme{std::move(name),
                        {make(0.3, 160, 0.0, a0, {lo, hi0}), make(0.3, 192, 0.0, a1, {lo, hi1}),
                         make(0.4, 224, 0.0, a2, {lo, 1.0})},
                        100};
}

ScheduleScheme pretrain(std::string name, int r0, double m0, int r1, double m1, int r2, double m2) {
  const auto b = pretrain_bounds();
  const auto s = AugLevel::Simple;
  return ScheduleScheme{std::move(name),
                        {make(0.3, r0, m0, s, b), make(0.3, r1, m1, s, b), make(0.4, r2, m2, s, b)},
                        800};
}

ScheduleScheme fixed(std::string name, int res) {
  return ScheduleScheme{std::move(name), {make(1.0, res, 0.75, AugLevel::Simple, pretrain_bounds())},
                        800};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json stage_json(const Stage& s) {
  return json{{"span", s.span},
              {"res", s.resolution},
              {"mask_ratio", s.masking_ratio},
              {"aug", to_string(s.aug)},
              {"sigma_lo", s.bounds.sigma_lo},
              {"sigma_hi", s.bounds.sigma_hi}};
}

json params_json(int epoch, const StageParams& p) {
  return json{{"epoch", epoch},
              {"stage", p.stage},
              {"res", p.resolution},
              {"mask_ratio", p.masking_ratio},
              {"aug", to_string(p.aug)},
              {"sigma_lo", p.bounds.sigma_lo},
              {"sigma_hi", p.bounds.sigma_hi}};
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

}  // namespace

cropmath::ScaleBounds pretrain_bounds() { return {std::sqrt(0.2), 1.0}; }

void ScheduleScheme::validate() const {
  if (stages.empty()) throw ConfigError("scheme '" + name + "' has no stages");
  double sum = 0.0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    const std::string where = "scheme '" + name + "' stage " + std::to_string(i);
    if (!(s.span > 0.0)) throw ConfigError(where + ": span must be positive");
    if (s.resolution <= 0 || s.resolution % 16 != 0) {
      throw ConfigError(where + ": res must be a positive multiple of 16");
    }
    if (!(s.masking_ratio >= 0.0 && s.masking_ratio <= 1.0)) {
      throw ConfigError(where + ": mask_ratio must be in [0, 1]");
    }
    try {
      s.bounds.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    sum += s.span;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("scheme '" + name + "': spans must sum to 1");
  if (total_epochs <= 0) throw ConfigError("scheme '" + name + "': total_epochs must be positive");
}

ScheduleScheme builtin_scheme(std::string_view name) {
  using A = AugLevel;
  if (name == "ft_s1") return finetune("ft_s1", A::ThreeAug, A::ThreeAug, A::ThreeAugPlus);
  if (name == "ft_s1minus") return finetune("ft_s1minus", A::ThreeAug, A::ThreeAug, A::ThreeAug);
  if (name == "ft_s1plus") {
    return finetune("ft_s1plus", A::ThreeAugPlus, A::ThreeAugPlus, A::ThreeAugPlus);
  }
  if (name == "ft_s3") {
    return finetune("ft_s3", A::ThreeAug, A::ThreeAug, A::ThreeAugPlus, 0.68, 0.84);
  }
  if (name == "pt_s1") return pretrain("pt_s1", 160, 0.50, 192, 0.66, 224, 0.75);
  if (name == "pt_s2") return pretrain("pt_s2", 160, 0.75, 192, 0.75, 224, 0.75);
  if (name == "pt_s3") return pretrain("pt_s3", 224, 0.75, 192, 0.75, 160, 0.75);
  if (name == "pt_s4") return pretrain("pt_s4", 160, 0.75, 192, 0.80, 224, 0.85);
  if (name == "pt_s5") return pretrain("pt_s5", 224, 0.75, 192, 0.75, 224, 0.75);
  if (name == "pt_s6") return pretrain("pt_s6", 224, 0.75, 192, 0.75, 224, 0.85);
  if (name == "fixed224") return fixed("fixed224", 224);
  if (name == "fixed192") return fixed("fixed192", 192);
  if (name == "fixed160") return fixed("fixed160", 160);
  std::string known;
  for (const auto& n : builtin_scheme_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (known: " + known + ")");
}

std::vector<std::string> builtin_scheme_names() {
  return {"ft_s1", "ft_s1minus", "ft_s1plus", "ft_s3", "pt_s1",    "pt_s2",   "pt_s3",
          "pt_s4", "pt_s5",      "pt_s6",     "fixed224", "fixed192", "fixed160"};
}

std::vector<int> stage_starts(const ScheduleScheme& scheme, int total_epochs) {
  scheme.validate();
  if (total_epochs <= 0) throw ConfigError("total_epochs must be positive");
  std::vector<int> starts(scheme.stages.size(), 0);
  double cum = 0.0;
  for (std::size_t i = 1; i < scheme.stages.size(); ++i) {
    cum += scheme.stages[i - 1].span;
    starts[i] = static_cast<int>(std::floor(cum * total_epochs + kBoundaryEps));
  }
  return starts;
}

StageParams params_for_epoch(const ScheduleScheme& scheme, int epoch, int total_epochs) {
  const auto starts = stage_starts(scheme, total_epochs);
  if (epoch < 0 || epoch >= total_epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(total_epochs) + ")");
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] <= epoch) k = i;
  }
  const Stage& s = scheme.stages[k];
  return StageParams{static_cast<int>(k), s.resolution, s.masking_ratio, s.aug, s.bounds};
}

std::string emit_json(const ScheduleScheme& scheme, int total_epochs) {
  const auto starts = stage_starts(scheme, total_epochs);
  std::ostringstream out;
  out << "{\n  \"scheme\": " << json(scheme.name).dump() << ",\n  \"total_epochs\": " << total_epochs
      << ",\n  \"stages\": [\n";
  for (std::size_t i = 0; i < scheme.stages.size(); ++i) {
    out << "    " << stage_json(scheme.stages[i]).dump() << (i + 1 < scheme.stages.size() ? ",\n" : "\n");
  }
  out << "  ],\n  \"epochs\": [\n";
  for (int e = 0; e < total_epochs; ++e) {
    out << "    " << params_json(e, params_for_epoch(scheme, e, total_epochs)).dump()
        << (e + 1 < total_epochs ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

std::string emit_csv(const ScheduleScheme& scheme, int total_epochs) {
  stage_starts(scheme, total_epochs);
  std::ostringstream out;
  out << "epoch,stage,res,mask_ratio,aug,sigma_lo,sigma_hi\n";
  for (int e = 0; e < total_epochs; ++e) {
    const auto p = params_for_epoch(scheme, e, total_epochs);
    out << e << ',' << p.stage << ',' << p.resolution << ',' << fmt(p.masking_ratio) << ','
        << to_string(p.aug) << ',' << fmt(p.bounds.sigma_lo) << ',' << fmt(p.bounds.sigma_hi) << '\n';
  }
  return out.str();
}

std::string emit_geometry_csv(const ScheduleScheme& scheme, int patch_size) {
  scheme.validate();
  std::ostringstream out;
  out << "stage,res,aug,sigma_lo,sigma_hi,perceptual_ratio,apparent_size,table_ratio,"
         "table_apparent,mask_ratio,masked_perceptual_ratio\n";
  for (std::size_t i = 0; i < scheme.stages.size(); ++i) {
    const Stage& s = scheme.stages[i];
    const auto g = cropmath::table_geometry(s.resolution, s.bounds);
    out << i << ',' << s.resolution << ',' << to_string(s.aug) << ',' << fmt(s.bounds.sigma_lo) << ','
        << fmt(s.bounds.sigma_hi) << ',' << fmt(g.perceptual_ratio) << ',' << fmt(g.apparent_size)
        << ',' << fmt(g.table_ratio) << ',' << fmt(g.table_apparent) << ',' << fmt(s.masking_ratio)
        << ',' << fmt(cropmath::masked_perceptual_ratio(s.masking_ratio, patch_size, s.resolution))
        << '\n';
  }
  return out.str();
}

LoadedSchedule load_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("schedule: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("schedule: document must be a JSON object");
  if (!doc.contains("stages") || !doc["stages"].is_array()) {
    throw ConfigError("schedule: missing array field 'stages'");
  }
  LoadedSchedule out;
  out.scheme.name = field_or<std::string>(doc, "scheme", "custom", "schedule");
  for (std::size_t i = 0; i < doc["stages"].size(); ++i) {
    const json& s = doc["stages"][i];
    const std::string where = "schedule: stages[" + std::to_string(i) + "]";
    if (!s.is_object()) throw ConfigError(where + " must be an object");
    Stage st;
    st.span = field<double>(s, "span", where);
    st.resolution = field<int>(s, "res", where);
    st.masking_ratio = field_or<double>(s, "mask_ratio", 0.0, where);
    st.aug = parse_aug_level(field_or<std::string>(s, "aug", "simple", where));
    st.bounds.sigma_lo = field<double>(s, "sigma_lo", where);
    st.bounds.sigma_hi = field<double>(s, "sigma_hi", where);
    out.scheme.stages.push_back(st);
  }
  out.total_epochs = field_or<int>(doc, "total_epochs", 100, "schedule");
  out.scheme.total_epochs = out.total_epochs;
  out.scheme.validate();
  if (doc.contains("epochs")) {
    const json& rows = doc["epochs"];
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(out.total_epochs)) {
      throw ConfigError("schedule: 'epochs' must hold total_epochs rows");
    }
    for (int e = 0; e < out.total_epochs; ++e) {
      const json& r = rows[static_cast<std::size_t>(e)];
      const std::string where = "schedule: epochs[" + std::to_string(e) + "]";
      StageParams p;
      p.stage = field<int>(r, "stage", where);
      p.resolution = field<int>(r, "res", where);
      p.masking_ratio = field<double>(r, "mask_ratio", where);
      p.aug = parse_aug_level(field<std::string>(r, "aug", where));
      p.bounds.sigma_lo = field<double>(r, "sigma_lo", where);
      p.bounds.sigma_hi = field<double>(r, "sigma_hi", where);
      if (field<int>(r, "epoch", where) != e ||
          !(p == params_for_epoch(out.scheme, e, out.total_epochs))) {
        throw ConfigError(where + " disagrees with the stage table");
      }
      out.epochs.push_back(p);
    }
  }
  return out;
}

}  // namespace essl::schedule
