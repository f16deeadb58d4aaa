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

// Task-adaptive threshold: the episode's mean P(O) over query tokens, used
// to veto event predictions the model is not confident about.

#include <vector>

#include "fsed/protonet.hpp"

namespace fsed {

struct Threshold {
  double t_meta = 0.0;
};

/// Mean of column 0 over all query rows. Throws DataError on an empty matrix.
Threshold compute_threshold(const ProbMatrix& probs);

/// Event classes with P(c|x) >= t_meta are viable. No viable class -> O;
/// otherwise the argmax over the viable classes and O, lowest index on ties.
std::vector<LocalLabel> predict_with_threshold(const ProbMatrix& probs, Threshold threshold);

}  // namespace fsed
