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

// Little-endian byte buffer helpers shared by the EMB1 and PSC1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "fsed/errors.hpp"

namespace fsed::io {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t>& bytes() noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint64_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == buf_.size(); }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (buf_.size() - pos_ < n) {
      throw DataError(DataError::Kind::kTruncated, std::string("truncated record: ") + what, pos_);
    }
  }

  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fsed::io
