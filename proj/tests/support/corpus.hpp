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


// Deterministic natural-image corpora for tests, derived from the seed
// photographs under tests/data/seeds.

#ifndef ESSL_TESTS_SUPPORT_CORPUS_HPP_
#define ESSL_TESTS_SUPPORT_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "essl/image.hpp"

namespace essl::testsupport {

enum class CorpusFormat { Jpeg, Ppm };

struct CorpusSpec {
  int images = 200;
  int classes = 10;
  std::uint64_t seed = 1;
  CorpusFormat format = CorpusFormat::Jpeg;
  int quality = 95;  // JPEG originals
  int min_side = 256;
  int max_side = 500;
};

std::filesystem::path data_dir();    // tests/data in the source tree
std::filesystem::path corpus_root(); // cache directory in the build tree

/// Decoded seed photographs, sorted by file name.
const std::vector<RgbImage>& seed_images();

/// Image i of a corpus: a random crop (area 25-100 %, aspect 3:4..4:3) of a
/// random seed, randomly mirrored, downscaled so the largest side lands in
/// [min_side, max_side] (never upscaled).
RgbImage corpus_image(const CorpusSpec& spec, std::uint64_t i);

/// Writes the corpus as class_XX/img_XXXXX.{jpg,ppm} unless a completed copy
/// already exists; returns its directory.
std::filesystem::path ensure_corpus(const CorpusSpec& spec);
std::filesystem::path ensure_corpus(const CorpusSpec& spec, const std::filesystem::path& root);

/// Builds (or reuses) a container of `corpus` at (max_res, quality).
std::filesystem::path ensure_container(const std::filesystem::path& corpus, int max_res, int quality,
                                       const std::string& tag);

/// Random RGB image with smooth structure (for codec tests).
RgbImage synthetic_image(int w, int h, std::uint64_t seed);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p);

}  // namespace essl::testsupport

#endif  // ESSL_TESTS_SUPPORT_CORPUS_HPP_
