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


#ifndef ESSL_AUG_LEVEL_HPP_
#define ESSL_AUG_LEVEL_HPP_

#include <string>
#include <string_view>

namespace essl {

/// Augmentation strength.
///   Simple        horizontal flip, p = 0.5
///   ThreeAug      Simple + one of {grayscale, solarize, gaussian blur}
///   ThreeAugPlus  ThreeAug + colour jitter (brightness, contrast, saturation)
enum class AugLevel { Simple, ThreeAug, ThreeAugPlus };

/// "simple", "3aug", "3aug+".
std::string to_string(AugLevel level);

/// Accepts the names above (case-insensitive) plus "threeaug" and
/// "threeaug+"/"threeaugplus". Throws ConfigError otherwise.
AugLevel parse_aug_level(std::string_view name);

}  // namespace essl

#endif  // ESSL_AUG_LEVEL_HPP_
