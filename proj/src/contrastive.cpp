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

#include "fsed/contrastive.hpp"

#include <map>
#include <string>
#include <vector>

#include "fsed/errors.hpp"

namespace fsed {

void ContrastiveConfig::validate() const {
  if (!(tau_sscl > 0.0) || !(tau_pqcl > 0.0)) throw UsageError("temperatures must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("alpha and beta must be non-negative");
  if (o_subsample_cap && *o_subsample_cap == 0) throw UsageError("o_subsample_cap must be >= 1");
}

bool has_positive_pairs(std::span<const LocalLabel> labels) {
  std::map<LocalLabel, std::size_t> counts;
  for (LocalLabel l : labels) {
    if (++counts[l] >= 2) return true;
  }
  return false;
}

Var sscl_loss(Tape& tape, Var projected, std::span<const LocalLabel> labels, double tau) {
  const Tensor& z = tape.value(projected);
  const std::size_t m = z.rows();
  if (m != labels.size()) {
    throw ShapeError("sscl_loss", std::to_string(m) + " rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (m < 2 || !has_positive_pairs(labels)) {
    throw DataError(DataError::Kind::kInvalid, "sscl_loss: no positive pairs in the support set");
  }

  std::vector<std::vector<std::size_t>> denominators;
  std::vector<std::size_t> positives;
  std::vector<double> weights;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::size_t> pos;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i && labels[j] == labels[i]) pos.push_back(i * m + j);
    }
    if (pos.empty()) continue;
    std::vector<std::size_t> others;
    others.reserve(m - 1);
    for (std::size_t k = 0; k < m; ++k) {
      if (k != i) others.push_back(i * m + k);
    }
    denominators.push_back(std::move(others));
    const double w = 1.0 / static_cast<double>(pos.size());
    for (std::size_t p : pos) {
      positives.push_back(p);
      weights.push_back(w);
    }
  }

  const Var sims = tape.scale(tape.matmul(projected, tape.transpose(projected)), 1.0 / tau);
  const Var log_norm = tape.sum(tape.group_logsumexp(sims, std::move(denominators)));
  const Var pos_mean = tape.sum(tape.mul(tape.gather(sims, std::move(positives)),
                                         tape.leaf(Tensor::vector(std::move(weights)))));
  return tape.sub(log_norm, pos_mean);
}

double sscl_loss(const Tensor& projected, std::span<const LocalLabel> labels, double tau) {
  Tape tape;
  return tape.value(sscl_loss(tape, tape.leaf(projected), labels, tau)).item();
}

Var pqcl_loss(Tape& tape, Var protos, Var projected_queries, std::span<const LocalLabel> labels,
              double tau) {
  const Tensor& p = tape.value(protos);
  const Tensor& z = tape.value(projected_queries);
  const std::size_t classes = p.rows();
  const std::size_t q = z.rows();
  if (q != labels.size() || p.cols() != z.cols()) {
    throw ShapeError("pqcl_loss", shape_string(p.shape()) + " prototypes, " + shape_string(z.shape()) +
                                      " queries, " + std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> members(classes, 0);
  for (LocalLabel l : labels) {
    if (l >= classes) {
      throw DataError(DataError::Kind::kLabelOutOfRange, "pqcl_loss: label " + std::to_string(l) + " out of range");
    }
    ++members[l];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c] == 0) {
      throw DataError(DataError::Kind::kInvalid,
                      "pqcl_loss: class " + std::to_string(c) + " has no query instances");
    }
  }

  std::vector<std::vector<std::size_t>> denominators;
  std::vector<std::size_t> targets;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> negatives;
    for (std::size_t k = 0; k < q; ++k) {
      if (labels[k] != c) negatives.push_back(c * q + k);
    }
    for (std::size_t i = 0; i < q; ++i) {
      if (labels[i] != c) continue;
      std::vector<std::size_t> group{c * q + i};
      group.insert(group.end(), negatives.begin(), negatives.end());
      denominators.push_back(std::move(group));
      targets.push_back(c * q + i);
    }
  }

  const Var sims = tape.scale(tape.matmul(protos, tape.transpose(projected_queries)), 1.0 / tau);
  const Var log_norm = tape.sum(tape.group_logsumexp(sims, std::move(denominators)));
  return tape.sub(log_norm, tape.sum(tape.gather(sims, std::move(targets))));
}

double pqcl_loss(const Tensor& protos, const Tensor& projected_queries,
                 std::span<const LocalLabel> labels, double tau) {
  Tape tape;
  return tape.value(pqcl_loss(tape, tape.leaf(protos), tape.leaf(projected_queries), labels, tau)).item();
}

HybridResult hybrid_loss(const EncoderParams& params, const EpisodeTensors& ep,
                         const ContrastiveConfig& config, Metric metric, bool with_grads) {
  Tape tape;
  const EncoderVars vars = bind(tape, params);
  const Var support = encode(tape, vars, tape.constant(ep.support));
  const Var query = encode(tape, vars, tape.constant(ep.query));

  const Var protos = prototypes(tape, support, ep.support_labels, ep.n_way);
  const Var ce = ce_loss(tape, class_log_probs(tape, query, protos, metric), ep.query_labels);

  auto pick = [](std::span<const LocalLabel> labels, const std::vector<std::size_t>& rows) {
    std::vector<LocalLabel> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(labels[r]);
    return out;
  };

  HybridResult result;
  const Var support_proj = project(tape, vars, support);
  const auto support_sub = pick(ep.support_labels, ep.support_contrast_rows);
  Var sscl = tape.leaf(Tensor::scalar(0.0));
  if (has_positive_pairs(support_sub)) {
    sscl = sscl_loss(tape, tape.select_rows(support_proj, ep.support_contrast_rows), support_sub,
                     config.tau_sscl);
  } else {
    result.sscl_skipped = true;
  }

  const Var proj_protos = prototypes(tape, support_proj, ep.support_labels, ep.n_way);
  const Var query_proj = project(tape, vars, tape.select_rows(query, ep.query_contrast_rows));
  const Var pqcl = pqcl_loss(tape, proj_protos, query_proj, pick(ep.query_labels, ep.query_contrast_rows),
                             config.tau_pqcl);

  const Var total =
      tape.add(ce, tape.add(tape.scale(sscl, config.alpha), tape.scale(pqcl, config.beta)));

  result.loss.ce = tape.value(ce).item();
  result.loss.sscl = tape.value(sscl).item();
  result.loss.pqcl = tape.value(pqcl).item();
  result.loss.total = tape.value(total).item();
  if (with_grads) {
    tape.backward(total);
    result.grads.dims = params.dims;
    result.grads.activation = params.activation;
    const auto vb = vars.blocks();
    auto gb = result.grads.blocks();
    for (std::size_t b = 0; b < vb.size(); ++b) *gb[b] = tape.grad(vb[b]);
  }
  return result;
}

}  // namespace fsed
