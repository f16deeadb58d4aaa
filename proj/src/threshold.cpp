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

#include "fsed/threshold.hpp"

#include "fsed/errors.hpp"

namespace fsed {

Threshold compute_threshold(const ProbMatrix& probs) {
  if (probs.queries() == 0 || probs.classes() == 0) {
    throw DataError(DataError::Kind::kInvalid, "compute_threshold: empty query set");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.queries(); ++i) total += probs.probs.at(i, 0);
  return {total / static_cast<double>(probs.queries())};
}

std::vector<LocalLabel> predict_with_threshold(const ProbMatrix& probs, Threshold threshold) {
  std::vector<LocalLabel> out(probs.queries(), 0);
  for (std::size_t i = 0; i < probs.queries(); ++i) {
    auto row = probs.probs.row(i);
    LocalLabel best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] >= threshold.t_meta && row[c] > row[best]) best = static_cast<LocalLabel>(c);
    }
    out[i] = best;
  }
  return out;
}

}  // namespace fsed
