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

// Support-support and prototype-query contrastive losses, and the hybrid
// objective that adds them to the query-anchored cross-entropy.

#include <cstddef>
#include <optional>
#include <span>

#include "fsed/encoder.hpp"
#include "fsed/episode.hpp"
#include "fsed/protonet.hpp"
#include "fsed/tape.hpp"

namespace fsed {

struct ContrastiveConfig {
  double tau_sscl = 0.5;
  double tau_pqcl = 0.1;
  double alpha = 0.5;
  double beta = 0.5;
  /// O tokens kept per episode for the contrastive losses; unset means K.
  std::optional<std::size_t> o_subsample_cap;

  std::size_t cap(std::size_t k_shot) const { return o_subsample_cap.value_or(k_shot); }
  /// Throws UsageError on a non-positive temperature, negative weight or zero cap.
  void validate() const;
};

struct LossBreakdown {
  double ce = 0.0;
  double sscl = 0.0;
  double pqcl = 0.0;
  double total = 0.0;
};

/// True when some class has at least two members.
bool has_positive_pairs(std::span<const LocalLabel> labels);

/// Supervised contrastive loss over l2-normalized rows. Each anchor with at
/// least one same-class partner contributes the mean over its positives j of
///   -log( exp(z_i.z_j / tau) / sum_{k != i} exp(z_i.z_k / tau) ).
/// Anchors without partners are skipped. Throws DataError when no class has
/// two members.
Var sscl_loss(Tape& tape, Var projected, std::span<const LocalLabel> labels, double tau);
double sscl_loss(const Tensor& projected, std::span<const LocalLabel> labels, double tau);

/// Prototype-anchored contrastive loss. For each class c and each query i
/// of class c:
///   -log( s_ci / (s_ci + sum_{k not in c} s_ck) ),  s_ci = exp(p_c.z_i / tau).
/// Throws DataError if a class has no query rows.
Var pqcl_loss(Tape& tape, Var protos, Var projected_queries, std::span<const LocalLabel> labels,
              double tau);
double pqcl_loss(const Tensor& protos, const Tensor& projected_queries,
                 std::span<const LocalLabel> labels, double tau);

struct HybridResult {
  LossBreakdown loss;
  EncoderParams grads;  // d total / d params, same layout as the params
  bool sscl_skipped = false;  // support subset had no positive pair
};

/// ce + alpha*sscl + beta*pqcl for one episode, with parameter gradients when
/// `with_grads` is set. CE and its prototypes use every token; the
/// contrastive terms use the subsampled rows. PQCL prototypes are means of
/// the projected support rows.
HybridResult hybrid_loss(const EncoderParams& params, const EpisodeTensors& episode,
                         const ContrastiveConfig& config, Metric metric, bool with_grads = true);

}  // namespace fsed
