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

#include "fsed/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "fsed/contrastive.hpp"
#include "fsed/errors.hpp"
#include "fsed/tape.hpp"
#include "fsed/encoder.hpp"
#include "fsed/gradcheck.hpp"
#include "fsed/protonet.hpp"
#include "fsed/sampler.hpp"

namespace fsed {
namespace {

constexpr double kStep = 1e-5;
constexpr double kFdTolerance = 1e-5;
constexpr double kClosedFormTolerance = 1e-8;
// Central differences only see the derivative where the loss is smooth on the
// scale of the step: no ReLU input may sit near its kink, and no projected row
// may sit near the origin where normalization blows up its curvature.
constexpr double kKinkMargin = 1e-3;
constexpr double kMinProjectedNorm = 0.1;
constexpr int kMaxRedraws = 200;

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Tensor t({rows, cols});
  for (double& v : t.values()) v = g(rng);
  return t;
}

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Scalar function of several matrices packed into one flat vector.
GradFunction tape_function(std::vector<std::pair<std::size_t, std::size_t>> shapes, Builder build) {
  return [shapes = std::move(shapes), build = std::move(build)](std::span<const double> x,
                                                                std::vector<double>* grad) {
    Tape tape;
    std::vector<Var> leaves;
    std::size_t offset = 0;
    for (const auto& [r, c] : shapes) {
      leaves.push_back(tape.leaf(Tensor::matrix(r, c, {x.begin() + static_cast<long>(offset),
                                                       x.begin() + static_cast<long>(offset + r * c)})));
      offset += r * c;
    }
    const Var out = build(tape, leaves);
    if (grad) {
      tape.backward(out);
      grad->clear();
      for (Var v : leaves) grad->insert(grad->end(), tape.grad(v).values().begin(), tape.grad(v).values().end());
    }
    return tape.value(out).item();
  };
}

std::vector<double> concat(std::initializer_list<const Tensor*> parts) {
  std::vector<double> out;
  for (const Tensor* t : parts) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

std::vector<LocalLabel> pick(const std::vector<LocalLabel>& labels, const std::vector<std::size_t>& rows) {
  std::vector<LocalLabel> out;
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

bool smooth_at(const EncoderParams& p, const EpisodeTensors& ep) {
  Tape t;
  const EncoderVars v = bind(t, p);
  auto min_abs = [&](Var x) {
    double m = INFINITY;
    for (double a : t.value(x).values()) m = std::min(m, std::abs(a));
    return m;
  };
  for (const Tensor* input : {&ep.support, &ep.query}) {
    const Var a1 = t.add_bias(t.matmul(t.leaf(*input), v.w1), v.b1);
    const Var rep = t.add_bias(t.matmul(t.relu(a1), v.w2), v.b2);
    const Var a2 = t.matmul(rep, v.v1);
    const Tensor& z = t.value(t.matmul(t.relu(a2), v.v2));
    if (min_abs(a1) < kKinkMargin || min_abs(a2) < kKinkMargin) return false;
    for (std::size_t r = 0; r < z.rows(); ++r) {
      double sq = 0.0;
      for (double x : z.row(r)) sq += x * x;
      if (std::sqrt(sq) < kMinProjectedNorm) return false;
    }
  }
  return true;
}

}  // namespace

EpisodeTensors random_episode_tensors(Rng& rng, std::size_t n_way, std::size_t k_shot, std::size_t m_query,
                                      std::size_t d_in, std::size_t tokens) {
  tokens = std::max<std::size_t>(tokens, 2);
  std::uniform_int_distribution<std::size_t> position(0, tokens - 1);
  auto build = [&](std::size_t per_class, Tensor& x, std::vector<LocalLabel>& labels) {
    x = random_matrix(rng, n_way * per_class * tokens, d_in);
    labels.assign(x.rows(), 0);
    for (std::size_t c = 1; c <= n_way; ++c) {
      for (std::size_t s = 0; s < per_class; ++s) {
        labels[((c - 1) * per_class + s) * tokens + position(rng)] = static_cast<LocalLabel>(c);
      }
    }
  };
  EpisodeTensors ep;
  ep.n_way = n_way;
  build(k_shot, ep.support, ep.support_labels);
  build(m_query, ep.query, ep.query_labels);
  ep.support_contrast_rows = contrastive_rows(ep.support_labels, k_shot, rng);
  ep.query_contrast_rows = contrastive_rows(ep.query_labels, k_shot, rng);
  return ep;
}

std::vector<CheckReport> run_gradcheck_suite(std::uint64_t seed, std::size_t instances) {
  CheckReport ce{"ce_loss (euclid/dot/cosine) vs finite differences", 0.0, kFdTolerance, 0};
  CheckReport sscl{"sscl_loss vs finite differences", 0.0, kFdTolerance, 0};
  CheckReport pqcl{"pqcl_loss vs finite differences", 0.0, kFdTolerance, 0};
  CheckReport hybrid{"hybrid total wrt encoder params vs finite differences", 0.0, kFdTolerance, 0};
  CheckReport closed{"closed-form CE gradients vs autodiff", 0.0, kClosedFormTolerance, 0};
  CheckReport closed_fd{"closed-form CE gradients vs finite differences", 0.0, kFdTolerance, 0};
  CheckReport probe{"bottleneck probe monotonicity (violations)", 0.0, 0.0, 0};

  std::size_t hybrid_redraws = 0;
  const Metric metrics[] = {Metric::kSquaredEuclidean, Metric::kDot, Metric::kCosine};
  for (std::size_t inst = 0; inst < instances; ++inst) {
    Rng rng = make_rng(seed, Stream::kSynth, inst);
    std::uniform_int_distribution<std::size_t> small(1, 3);
    const std::size_t n_way = small(rng);
    const std::size_t k_shot = std::min<std::size_t>(small(rng), 2);
    const std::size_t m_query = std::min<std::size_t>(small(rng), 2);
    const std::size_t d = 2 + small(rng) * 2;
    const EpisodeTensors ep = random_episode_tensors(rng, n_way, k_shot, m_query, d, 3);
    const Tensor s_reps = random_matrix(rng, ep.support.rows(), d);
    const Tensor q_reps = random_matrix(rng, ep.query.rows(), d);
    const std::size_t ns = s_reps.rows(), nq = q_reps.rows();

    const Metric metric = metrics[inst % 3];
    auto ce_fn = tape_function({{ns, d}, {nq, d}}, [&](Tape& t, const std::vector<Var>& v) {
      return ce_loss(t, class_log_probs(t, v[1], prototypes(t, v[0], ep.support_labels, n_way), metric),
                     ep.query_labels);
    });
    ce.max_error = std::max(ce.max_error, grad_check(ce_fn, concat({&s_reps, &q_reps}), kStep).max_rel_error);
    ++ce.instances;

    const auto s_sub = pick(ep.support_labels, ep.support_contrast_rows);
    if (has_positive_pairs(s_sub)) {
      const Tensor raw = random_matrix(rng, s_sub.size(), d);
      auto fn = tape_function({{raw.rows(), d}}, [&](Tape& t, const std::vector<Var>& v) {
        return sscl_loss(t, t.l2_normalize(v[0]), s_sub, 0.5);
      });
      sscl.max_error = std::max(sscl.max_error, grad_check(fn, raw.values(), kStep).max_rel_error);
      ++sscl.instances;
    }

    const auto q_sub = pick(ep.query_labels, ep.query_contrast_rows);
    const Tensor protos = random_matrix(rng, n_way + 1, d, 0.5);
    const Tensor raw_q = random_matrix(rng, q_sub.size(), d);
    auto pq_fn = tape_function({{n_way + 1, d}, {raw_q.rows(), d}}, [&](Tape& t, const std::vector<Var>& v) {
      return pqcl_loss(t, v[0], t.l2_normalize(v[1]), q_sub, 0.1);
    });
    pqcl.max_error = std::max(pqcl.max_error, grad_check(pq_fn, concat({&protos, &raw_q}), kStep).max_rel_error);
    ++pqcl.instances;

    EncoderDims dims{d, 6, 5, 6, 4};
    EncoderParams base;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRedraws) throw NumericError("no smooth parameter draw for hybrid gradient check");
      base = init_params(rng(), dims);
      // Zero biases would pin dead rows exactly onto a kink.
      base.b1 = Tensor::vector(random_matrix(rng, 1, dims.d_h, 0.1).values());
      base.b2 = Tensor::vector(random_matrix(rng, 1, dims.d_rep, 0.1).values());
      if (smooth_at(base, ep)) break;
      ++hybrid_redraws;
    }
    ContrastiveConfig cc;
    GradFunction hy_fn = [&](std::span<const double> x, std::vector<double>* grad) {
      EncoderParams p = base;
      assign(p, x);
      const HybridResult r = hybrid_loss(p, ep, cc, metric, grad != nullptr);
      if (grad) *grad = flatten(r.grads);
      return r.loss.total;
    };
    hybrid.max_error = std::max(hybrid.max_error, grad_check(hy_fn, flatten(base), kStep).max_rel_error);
    ++hybrid.instances;

    // Closed-form dot-product gradients for one query.
    const Tensor cf_protos = random_matrix(rng, n_way + 1, d);
    const Tensor h = random_matrix(rng, 1, d);
    const LocalLabel y = static_cast<LocalLabel>(inst % (n_way + 1));
    const GradientReport rep = ce_grads_analytic(h.values(), cf_protos, y);
    closed.max_error = std::max(closed.max_error, rep.max_abs_discrepancy);
    ++closed.instances;
    auto single = [&](std::span<const double> x) {
      Tape t;
      const LocalLabel label[] = {y};
      const Var hv = t.leaf(Tensor::matrix(1, d, {x.begin(), x.end()}));
      return t.value(ce_loss(t, class_log_probs(t, hv, t.leaf(cf_protos), Metric::kDot), label)).item();
    };
    const auto fd = numeric_gradient(single, h.values(), kStep);
    for (std::size_t k = 0; k < d; ++k) {
      closed_fd.max_error =
          std::max(closed_fd.max_error, std::abs(rep.dh[k] - fd[k]) / std::max(1.0, std::abs(fd[k])));
    }
    ++closed_fd.instances;

    const double seps[] = {1.0, 0.75, 0.5, 0.25, 0.1, 0.0};
    const auto rows = bottleneck_probe(seps, rng(), d, n_way + 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].grad_norm > rows[i - 1].grad_norm) probe.max_error += 1.0;
    }
    if (rows.back().grad_norm != 0.0) probe.max_error += 1.0;
    ++probe.instances;
  }
  hybrid.name += " (" + std::to_string(hybrid_redraws) + " non-smooth draws redrawn)";
  return {ce, sscl, pqcl, hybrid, closed, closed_fd, probe};
}

}  // namespace fsed
