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

#include "fsed/adamw.hpp"

#include <cmath>

#include "fsed/errors.hpp"

namespace fsed {

void AdamW::step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw ShapeError("adamw", "parameter/gradient block count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adamw", "block count changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = m_[b];
    auto& v = v_[b];
    if (p.size() != g.size() || p.size() != m.size()) throw ShapeError("adamw", "block size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= opt_.lr * opt_.weight_decay * p[i];
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g[i];
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g[i] * g[i];
      p[i] -= opt_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt_.eps);
    }
  }
}

void AdamW::step(EncoderParams& params, const EncoderParams& grads) {
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  for (Tensor* t : params.blocks()) p.push_back(t->data());
  for (const Tensor* t : grads.blocks()) g.push_back(t->data());
  step(p, g);
}

}  // namespace fsed
