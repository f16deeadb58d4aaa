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
#include <map>
#include <vector>

#include "fsed/dataset.hpp"
#include "fsed/episode.hpp"
#include "fsed/rng.hpp"

namespace fsed {

/// Sentences grouped by their trigger's event type.
class ClassIndex {
 public:
  explicit ClassIndex(const Dataset& dataset);

  const std::map<LabelId, std::vector<std::size_t>>& by_class() const noexcept { return by_class_; }
  /// Event types with at least `min_sentences` sentences, ascending.
  std::vector<LabelId> eligible(std::size_t min_sentences) const;

 private:
  std::map<LabelId, std::vector<std::size_t>> by_class_;
};

/// N event types chosen uniformly among those with >= K+M sentences; then
/// K support and M query sentences per type, without replacement. Throws
/// SamplingError describing the shortfall.
Episode sample_episode(const Dataset& dataset, const ClassIndex& index, std::size_t n_way,
                       std::size_t k_shot, std::size_t m_query, Rng& rng);
Episode sample_episode(const Dataset& dataset, std::size_t n_way, std::size_t k_shot,
                       std::size_t m_query, Rng& rng);

/// Every non-O row plus up to `o_cap` O rows drawn uniformly without
/// replacement; ascending.
std::vector<std::size_t> contrastive_rows(const std::vector<LocalLabel>& labels, std::size_t o_cap, Rng& rng);

/// Stacks the episode's tokens, relabels them episode-locally and draws the
/// contrastive subsets with `rng`.
EpisodeTensors assemble(const Dataset& dataset, const Episode& episode, std::size_t o_cap, Rng& rng);

/// Synthetic FewEvent-like corpus: one trigger per sentence.
struct SynthSpec {
  std::size_t class_count = 10;
  std::size_t sentences_per_class = 20;
  std::size_t sentence_length = 12;
  std::size_t d_in = 16;
  double cluster_separation = 4.0;
  double o_noise_scale = 1.0;
  double trigger_noise_scale = 0.5;
  double overlap_fraction = 0.0;
  /// Offset into the center lattice and label names; disjoint offsets give
  /// disjoint splits.
  std::size_t first_class = 0;

  /// Throws UsageError on non-positive counts or overlap outside [0, 1].
  void validate() const;
};

/// Event type k is centered at separation * v_k, where v_k enumerates the
/// nonzero vectors of {-1, 0, 1}^d (so distinct centers are >= separation
/// apart). Triggers ~ N(center, trigger_noise^2 I); O tokens ~ N(0, o_noise^2 I),
/// except an overlap_fraction of them placed part-way toward a random
/// center of this dataset. Values are rounded to float so EMB1 round-trips.
Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed);

}  // namespace fsed
