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

#include "fsed/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fsed/errors.hpp"

namespace fsed {

Counts count_predictions(std::span<const LocalLabel> gold, std::span<const LocalLabel> predicted) {
  if (gold.size() != predicted.size()) {
    throw ShapeError("count_predictions", std::to_string(gold.size()) + " gold vs " +
                                              std::to_string(predicted.size()) + " predicted");
  }
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const LocalLabel g = gold[i];
    const LocalLabel p = predicted[i];
    if (p != 0 && p == g) ++c.tp;
    if (p != 0 && p != g) ++c.fp;
    if (g != 0 && p != g) ++c.fn;
  }
  return c;
}

EvalMetrics EvalMetrics::from_counts(const Counts& c) {
  EvalMetrics m;
  m.counts = c;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace {

void mean_std(const std::vector<EvalMetrics>& runs, double EvalMetrics::*field, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (runs.empty()) return;
  for (const auto& r : runs) mean += r.*field;
  mean /= static_cast<double>(runs.size());
  for (const auto& r : runs) sd += (r.*field - mean) * (r.*field - mean);
  sd = std::sqrt(sd / static_cast<double>(runs.size()));
}

}  // namespace

RunSummary RunSummary::aggregate(std::vector<EvalMetrics> runs) {
  RunSummary s;
  s.runs = std::move(runs);
  mean_std(s.runs, &EvalMetrics::precision, s.precision_mean, s.precision_std);
  mean_std(s.runs, &EvalMetrics::recall, s.recall_mean, s.recall_std);
  mean_std(s.runs, &EvalMetrics::f1, s.f1_mean, s.f1_std);
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace fsed
