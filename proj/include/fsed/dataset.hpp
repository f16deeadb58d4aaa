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
#include <filesystem>
#include <string>
#include <vector>

#include "fsed/tensor.hpp"

namespace fsed {

using LabelId = std::uint32_t;
inline constexpr LabelId kOutside = 0;

/// Ordered event-type names; index 0 is always "O".
class LabelSpace {
 public:
  LabelSpace() : names_{"O"} {}
  /// Throws DataError if names[0] != "O" or names repeat.
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(LabelId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool contains(LabelId id) const noexcept { return id < names_.size(); }

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> names_;
};

struct SentenceRecord {
  std::uint64_t id = 0;
  Tensor embeddings;            // n x d
  std::vector<LabelId> labels;  // n dataset-global ids

  std::size_t length() const noexcept { return labels.size(); }
  bool operator==(const SentenceRecord&) const = default;
};

enum class Split { kUnspecified, kTrain, kValid, kTest };

std::string split_name(Split s);

struct Dataset {
  LabelSpace labels;
  std::vector<SentenceRecord> sentences;
  Split split = Split::kUnspecified;
  std::uint32_t dim = 0;

  /// Throws DataError on the first broken invariant.
  void validate() const;
  /// Non-O label ids that occur in at least one sentence, ascending.
  std::vector<LabelId> present_event_labels() const;

  bool operator==(const Dataset&) const = default;
};

struct DatasetStats {
  std::size_t class_count = 0;
  std::size_t trigger_count = 0;
  double avg_sentence_length = 0.0;
};

DatasetStats dataset_stats(const Dataset& dataset);

/// "classes=5 triggers=100 avg_len=12.0"
std::string format_stats(const DatasetStats& stats);

/// EMB1 codec. All integers little-endian; embeddings stored as float32.
Dataset load_emb1(const std::filesystem::path& path, Split split = Split::kUnspecified);
Dataset decode_emb1(const std::vector<std::uint8_t>& bytes, Split split = Split::kUnspecified);
void write_emb1(const Dataset& dataset, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_emb1(const Dataset& dataset);

/// Throws DataError if two datasets share a non-O event-type name.
void check_disjoint_labels(const std::vector<const Dataset*>& splits);

}  // namespace fsed
