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

#include <cstdint>
#include <vector>

#include "fsed/dataset.hpp"
#include "fsed/protonet.hpp"
#include "fsed/tensor.hpp"

namespace fsed {

/// One N-way-K-shot task, as sentence indices into a Dataset.
struct Episode {
  std::size_t n_way = 0;
  std::vector<std::size_t> support;  // N*K sentence indices, grouped by class
  std::vector<std::size_t> query;    // N*M sentence indices, grouped by class
  std::vector<LabelId> class_map;    // local index -> global id; class_map[0] == O
  std::uint64_t seed = 0;

  bool operator==(const Episode&) const = default;
};

/// Token-level view of an Episode: stacked embeddings with local labels, and
/// the rows the contrastive losses see after O subsampling.
struct EpisodeTensors {
  std::size_t n_way = 0;
  Tensor support;  // support tokens x d_in
  std::vector<LocalLabel> support_labels;
  Tensor query;  // query tokens x d_in
  std::vector<LocalLabel> query_labels;
  std::vector<std::size_t> support_contrast_rows;  // ascending
  std::vector<std::size_t> query_contrast_rows;    // ascending
};

}  // namespace fsed
