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

#include "fsed/protonet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "fsed/errors.hpp"
#include "fsed/rng.hpp"

namespace fsed {
namespace {

std::vector<std::size_t> member_counts(std::span<const LocalLabel> labels, std::size_t n_way) {
  std::vector<std::size_t> counts(n_way + 1, 0);
  for (LocalLabel l : labels) {
    if (l > n_way) {
      throw DataError(DataError::Kind::kLabelOutOfRange,
                      "episode label " + std::to_string(l) + " exceeds N=" + std::to_string(n_way));
    }
    ++counts[l];
  }
  for (std::size_t c = 0; c <= n_way; ++c) {
    if (counts[c] == 0) {
      throw DataError(DataError::Kind::kInvalid, "class " + std::to_string(c) + " has no support tokens");
    }
  }
  return counts;
}

std::vector<std::size_t> label_indices(std::span<const LocalLabel> labels, std::size_t classes) {
  std::vector<std::size_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DataError(DataError::Kind::kLabelOutOfRange,
                      "query label " + std::to_string(labels[i]) + " out of range");
    }
    idx[i] = i * classes + labels[i];
  }
  return idx;
}

}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kSquaredEuclidean: return "euclid";
    case Metric::kDot: return "dot";
    case Metric::kCosine: return "cosine";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  if (s == "euclid") return Metric::kSquaredEuclidean;
  if (s == "dot") return Metric::kDot;
  if (s == "cosine") return Metric::kCosine;
  throw UsageError("unknown metric \"" + s + "\" (expected euclid, dot or cosine)");
}

PrototypeSet compute_prototypes(const Tensor& support, std::span<const LocalLabel> labels,
                                std::size_t n_way) {
  if (support.rows() != labels.size()) {
    throw ShapeError("compute_prototypes", std::to_string(support.rows()) + " rows vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  PrototypeSet set;
  set.counts = member_counts(labels, n_way);
  const std::size_t d = support.cols();
  set.vectors = Tensor({n_way + 1, d}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto dst = set.vectors.row(labels[i]);
    auto src = support.row(i);
    for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
  }
  for (std::size_t c = 0; c <= n_way; ++c) {
    for (double& v : set.vectors.row(c)) v /= static_cast<double>(set.counts[c]);
  }
  return set;
}

Var prototypes(Tape& tape, Var support, std::span<const LocalLabel> labels, std::size_t n_way) {
  const auto counts = member_counts(labels, n_way);
  Tensor averaging({n_way + 1, labels.size()}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    averaging.at(labels[i], i) = 1.0 / static_cast<double>(counts[labels[i]]);
  }
  return tape.matmul(tape.constant(std::move(averaging)), support);
}

Var class_logits(Tape& tape, Var queries, Var protos, Metric metric) {
  switch (metric) {
    case Metric::kSquaredEuclidean:
      return tape.neg(tape.pairwise_sqdist(queries, protos));
    case Metric::kDot:
      return tape.matmul(queries, tape.transpose(protos));
    case Metric::kCosine:
      return tape.matmul(tape.l2_normalize(queries), tape.transpose(tape.l2_normalize(protos)));
  }
  throw UsageError("unknown metric");
}

Var class_log_probs(Tape& tape, Var queries, Var protos, Metric metric) {
  return tape.log_softmax_rows(class_logits(tape, queries, protos, metric));
}

ProbMatrix classify(const Tensor& queries, const Tensor& protos, Metric metric) {
  Tape tape;
  const Var lp = class_log_probs(tape, tape.leaf(queries), tape.leaf(protos), metric);
  ProbMatrix pm;
  pm.log_probs = tape.value(lp);
  pm.probs = pm.log_probs;
  for (double& v : pm.probs.values()) v = std::exp(v);
  return pm;
}

Var ce_loss(Tape& tape, Var log_probs, std::span<const LocalLabel> labels) {
  const Tensor& lp = tape.value(log_probs);
  if (lp.rows() != labels.size()) {
    throw ShapeError("ce_loss", std::to_string(lp.rows()) + " query rows vs " +
                                    std::to_string(labels.size()) + " labels");
  }
  return tape.neg(tape.sum(tape.gather(log_probs, label_indices(labels, lp.cols()))));
}

double ce_loss(const ProbMatrix& probs, std::span<const LocalLabel> labels) {
  if (probs.queries() != labels.size()) {
    throw ShapeError("ce_loss", std::to_string(probs.queries()) + " query rows vs " +
                                    std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t idx : label_indices(labels, probs.classes())) total += probs.log_probs[idx];
  return -total;
}

std::vector<LocalLabel> argmax_rows(const ProbMatrix& probs) {
  std::vector<LocalLabel> out(probs.queries());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = probs.probs.row(i);
    // max_element keeps the first maximum.
    out[i] = static_cast<LocalLabel>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

GradientReport ce_grads_analytic(std::span<const double> query, const Tensor& protos, LocalLabel true_class) {
  const std::size_t d = query.size();
  const std::size_t classes = protos.rows();
  if (protos.cols() != d || true_class >= classes || classes < 2) {
    throw ShapeError("ce_grads_analytic", "query of " + std::to_string(d) + " vs prototypes " +
                                              shape_string(protos.shape()));
  }
  auto dotp = [&](std::size_t c) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += query[k] * protos.at(c, k);
    return s;
  };

  GradientReport rep;
  const double pos_score = dotp(true_class);
  std::vector<double> gaps;
  for (std::size_t c = 0; c < classes; ++c) {
    if (c != true_class) gaps.push_back(dotp(c) - pos_score);
  }
  for (double a : gaps) rep.deltas.push_back(std::exp(a));

  // w_n = delta_n / (1 + sum delta), evaluated with a common shift.
  const double shift = std::max(0.0, *std::max_element(gaps.begin(), gaps.end()));
  double denom = std::exp(-shift);
  for (double a : gaps) denom += std::exp(a - shift);
  std::vector<double> w;
  double w_total = 0.0;
  for (double a : gaps) {
    w.push_back(std::exp(a - shift) / denom);
    w_total += w.back();
  }

  rep.dh = Tensor({d}, 0.0);
  rep.dp_pos = Tensor({d}, 0.0);
  rep.dp_neg = Tensor({classes - 1, d}, 0.0);
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (c == true_class) continue;
    for (std::size_t k = 0; k < d; ++k) {
      rep.dh[k] += w[n] * (protos.at(c, k) - protos.at(true_class, k));
      rep.dp_neg.at(n, k) = w[n] * query[k];
    }
    ++n;
  }
  for (std::size_t k = 0; k < d; ++k) rep.dp_pos[k] = -w_total * query[k];

  Tape tape;
  const Var h = tape.leaf(Tensor::matrix(1, d, {query.begin(), query.end()}));
  const Var p = tape.leaf(protos);
  const LocalLabel label[] = {true_class};
  tape.backward(ce_loss(tape, class_log_probs(tape, h, p, Metric::kDot), label));
  rep.dh_autodiff = Tensor({d}, tape.grad(h).values());
  rep.dp_pos_autodiff = Tensor({d}, 0.0);
  rep.dp_neg_autodiff = Tensor({classes - 1, d}, 0.0);
  n = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    auto src = tape.grad(p).row(c);
    auto dst = c == true_class ? rep.dp_pos_autodiff.data() : rep.dp_neg_autodiff.row(n++);
    std::copy(src.begin(), src.end(), dst.begin());
  }

  auto track = [&](const Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      rep.max_abs_discrepancy = std::max(rep.max_abs_discrepancy, std::abs(a[i] - b[i]));
    }
  };
  track(rep.dh, rep.dh_autodiff);
  track(rep.dp_pos, rep.dp_pos_autodiff);
  track(rep.dp_neg, rep.dp_neg_autodiff);
  return rep;
}

std::vector<BottleneckRow> bottleneck_probe(std::span<const double> separations, std::uint64_t seed,
                                            std::size_t dim, std::size_t negatives) {
  if (separations.empty() || separations.back() != 0.0) {
    throw UsageError("bottleneck_probe: separation sequence must end at 0");
  }
  for (std::size_t i = 0; i < separations.size(); ++i) {
    if (separations[i] < 0.0 || separations[i] > 1.0) {
      throw UsageError("bottleneck_probe: separations must lie in [0, 1]");
    }
    if (i > 0 && !(separations[i] < separations[i - 1])) {
      throw UsageError("bottleneck_probe: separations must decrease strictly");
    }
  }
  if (dim == 0 || negatives == 0) throw UsageError("bottleneck_probe: dim and negatives must be positive");

  Rng rng(seed);
  std::normal_distribution<double> gauss;
  auto unit = [&](double length) {
    std::vector<double> v(dim);
    double sq = 0.0;
    for (double& x : v) {
      x = gauss(rng);
      sq += x * x;
    }
    for (double& x : v) x *= length / std::sqrt(sq);
    return v;
  };
  std::vector<double> center(dim);
  for (double& x : center) x = gauss(rng);
  const auto query = unit(0.5);
  std::vector<std::vector<double>> dirs;
  for (std::size_t c = 0; c <= negatives; ++c) dirs.push_back(unit(1.0));

  std::vector<BottleneckRow> rows;
  for (double s : separations) {
    Tensor protos({negatives + 1, dim});
    for (std::size_t c = 0; c <= negatives; ++c) {
      for (std::size_t k = 0; k < dim; ++k) protos.at(c, k) = center[k] + s * dirs[c][k];
    }
    const auto rep = ce_grads_analytic(query, protos, 0);
    double sq = 0.0;
    for (double v : rep.dh.values()) sq += v * v;
    rows.push_back({s, std::sqrt(sq)});
  }
  return rows;
}

std::string bottleneck_csv(const std::vector<BottleneckRow>& rows) {
  std::string out = "separation,grad_norm\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.separation, r.grad_norm);
    out += buf;
  }
  return out;
}

}  // namespace fsed
