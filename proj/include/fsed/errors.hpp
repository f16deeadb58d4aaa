// Copyright 2026 The fsed Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsed {

/// Base of every error the engine raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the primitive.
class ShapeError : public Error {
 public:
  ShapeError(std::string primitive, std::string detail)
      : Error(primitive + ": shape mismatch: " + detail),
        primitive_(std::move(primitive)) {}
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

/// A value became NaN/Inf, or a numerical precondition failed.
class NumericError : public Error {
 public:
  static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

  explicit NumericError(const std::string& what, std::size_t index = kNoIndex)
      : Error(what), index_(index) {}
  /// Tape node index or perturbed coordinate, when one applies.
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  enum class Kind {
    kIo,
    kBadMagic,
    kBadVersion,
    kTruncated,
    kLabelOutOfRange,
    kNonFinite,
    kBadLabelSpace,
    kInvalid,
  };
  static constexpr std::uint64_t kNoOffset = static_cast<std::uint64_t>(-1);

  DataError(Kind kind, const std::string& what, std::uint64_t offset = kNoOffset)
      : Error(offset == kNoOffset ? what
                                  : what + " (at byte offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}
  /// Same error with `prefix` (e.g. a file path) prepended to the message.
  DataError(const DataError& inner, const std::string& prefix)
      : Error(prefix + inner.what()), kind_(inner.kind_), offset_(inner.offset_) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

/// The dataset cannot supply the requested episode.
class SamplingError : public DataError {
 public:
  explicit SamplingError(const std::string& what) : DataError(Kind::kInvalid, what) {}
};

/// Bad command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsed
