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


#include "essl/aug_level.hpp"

#include <algorithm>
#include <cctype>

#include "essl/error.hpp"

namespace essl {

std::string to_string(AugLevel level) {
  switch (level) {
    case AugLevel::Simple: return "simple";
    case AugLevel::ThreeAug: return "3aug";
    case AugLevel::ThreeAugPlus: return "3aug+";
  }
  return "simple";
}

AugLevel parse_aug_level(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "simple") return AugLevel::Simple;
  if (s == "3aug" || s == "threeaug") return AugLevel::ThreeAug;
  if (s == "3aug+" || s == "threeaug+" || s == "threeaugplus") return AugLevel::ThreeAugPlus;
  throw ConfigError("unknown augmentation level '" + std::string(name) +
                    "' (expected simple, 3aug or 3aug+)");
}

}  // namespace essl
