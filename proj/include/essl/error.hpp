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

#ifndef ESSL_ERROR_HPP_
#define ESSL_ERROR_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace essl {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Index or rectangle outside the valid domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures (missing file, unwritable destination).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A container whose header does not describe a supported format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A container whose bytes do not match what its metadata promises.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::int64_t index = -1)
      : Error(what), index_(index) {}

  /// Sample index the corruption was detected at, or -1 for file-level damage.
  std::int64_t index() const noexcept { return index_; }

 private:
  std::int64_t index_;
};

/// Malformed or unsupported JPEG stream.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace essl

#endif  // ESSL_ERROR_HPP_
