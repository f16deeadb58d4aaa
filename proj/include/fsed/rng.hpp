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
#include <random>

namespace fsed {

using Rng = std::mt19937_64;

/// Named substreams. Each draws from its own seed so that, e.g., the test
/// episodes do not depend on how many training iterations ran.
enum class Stream : std::uint64_t {
  kInit = 1,
  kTrainEpisodes = 2,
  kValidEpisodes = 3,
  kTestEpisodes = 4,
  kRuns = 5,
  kSynth = 6,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for item `index` of `stream` under `base`. Pure, so episodes can be
/// generated in any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return mix64(mix64(mix64(base) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

inline Rng make_rng(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(base, stream, index));
}

}  // namespace fsed
