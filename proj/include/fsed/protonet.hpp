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

// Prototypical-network backbone: class means over support tokens, a
// distance softmax over prototypes, the query-anchored cross-entropy loss,
// and the closed-form dot-product gradients that expose its bottleneck.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsed/tape.hpp"
#include "fsed/tensor.hpp"

namespace fsed {

enum class Metric { kSquaredEuclidean, kDot, kCosine };

std::string metric_name(Metric m);
/// Accepts euclid / dot / cosine. Throws UsageError otherwise.
Metric parse_metric(const std::string& s);

/// Episode-local class index: 0 is O, 1..N the sampled event types.
using LocalLabel = std::uint32_t;

struct PrototypeSet {
  Tensor vectors;                   // (N+1) x d
  std::vector<std::size_t> counts;  // support members per class
};

struct ProbMatrix {
  Tensor probs;      // queries x (N+1)
  Tensor log_probs;  // same shape, computed stably

  std::size_t queries() const noexcept { return probs.rows(); }
  std::size_t classes() const noexcept { return probs.cols(); }
};

/// Mean of the support rows of each class 0..n_way, dividing by the actual
/// member count. Throws DataError naming the first empty class.
PrototypeSet compute_prototypes(const Tensor& support, std::span<const LocalLabel> labels,
                                std::size_t n_way);
/// Same means on the tape, as a constant averaging matrix times `support`.
Var prototypes(Tape& tape, Var support, std::span<const LocalLabel> labels, std::size_t n_way);

/// Negated distances (queries x classes): -||h-p||^2, h.p, or cos(h,p).
Var class_logits(Tape& tape, Var queries, Var protos, Metric metric);
/// log P(c | x): row log-softmax of class_logits, shifted by the row max.
Var class_log_probs(Tape& tape, Var queries, Var protos, Metric metric);

/// Row-stochastic P(c | x) from the stabilized log-softmax of -d.
ProbMatrix classify(const Tensor& queries, const Tensor& protos, Metric metric);

/// -sum_i log P(y_i | x_i). Both overloads add in the same order, so they
/// agree bit for bit.
Var ce_loss(Tape& tape, Var log_probs, std::span<const LocalLabel> labels);
double ce_loss(const ProbMatrix& probs, std::span<const LocalLabel> labels);

/// Row argmax, lowest index on ties.
std::vector<LocalLabel> argmax_rows(const ProbMatrix& probs);

/// Closed-form CE gradients for one query under the dot-product metric,
/// next to the tape's answer.
struct GradientReport {
  std::vector<double> deltas;      // exp(h.p_n - h.p_pos) per negative, class order
  Tensor dh;                       // dL/dh
  Tensor dp_pos;                   // dL/dp_pos
  Tensor dp_neg;                   // rows: dL/dp_n for each negative, class order
  Tensor dh_autodiff, dp_pos_autodiff, dp_neg_autodiff;
  double max_abs_discrepancy = 0.0;
};

GradientReport ce_grads_analytic(std::span<const double> query, const Tensor& protos, LocalLabel true_class);

struct BottleneckRow {
  double separation = 0.0;
  double grad_norm = 0.0;
};

/// Places a positive and `negatives` negative prototypes at c + s*u, with
/// unit directions u drawn from `seed`, fixes a query of norm 1/2 and records
/// ||dL/dh|| for each separation s. `separations` must decrease strictly,
/// end at 0 and stay within [0, 1].
std::vector<BottleneckRow> bottleneck_probe(std::span<const double> separations, std::uint64_t seed,
                                            std::size_t dim = 8, std::size_t negatives = 4);
std::string bottleneck_csv(const std::vector<BottleneckRow>& rows);

}  // namespace fsed
