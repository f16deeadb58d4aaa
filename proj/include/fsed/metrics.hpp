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
#include <span>
#include <string>
#include <vector>

#include "fsed/protonet.hpp"

namespace fsed {

/// Pooled token-level counts over event types (O is never a positive).
struct Counts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

/// tp: predicted event == gold event; fp: predicted event, gold differs;
/// fn: gold event, prediction differs.
Counts count_predictions(std::span<const LocalLabel> gold, std::span<const LocalLabel> predicted);

struct EvalMetrics {
  Counts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static EvalMetrics from_counts(const Counts& c);
};

/// Mean and population standard deviation of each score across runs.
struct RunSummary {
  std::vector<EvalMetrics> runs;
  double precision_mean = 0.0, precision_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;

  static RunSummary aggregate(std::vector<EvalMetrics> runs);
};

double median(std::vector<double> values);

}  // namespace fsed
