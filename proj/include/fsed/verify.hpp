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

// Gradient verification suite behind `fsed gradcheck`.

#include <cstdint>
#include <string>
#include <vector>

#include "fsed/episode.hpp"
#include "fsed/rng.hpp"

namespace fsed {

struct CheckReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;

  bool passed() const { return max_error <= tolerance; }
};

/// Random token-level episode: every class 0..n_way gets support and query
/// tokens. Sentences have `tokens` tokens with one trigger each.
EpisodeTensors random_episode_tensors(Rng& rng, std::size_t n_way, std::size_t k_shot, std::size_t m_query,
                                      std::size_t d_in, std::size_t tokens);

/// Finite-difference checks of the CE, SSCL, PQCL and hybrid gradients,
/// the closed-form CE gradients against the tape, and the bottleneck
/// monotonicity, over `instances` random episodes each.
std::vector<CheckReport> run_gradcheck_suite(std::uint64_t seed, std::size_t instances);

}  // namespace fsed
