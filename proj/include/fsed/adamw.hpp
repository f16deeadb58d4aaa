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
#include <vector>

#include "fsed/encoder.hpp"

namespace fsed {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Decoupled weight decay Adam over flat parameter blocks:
///   p -= lr * wd * p
///   m = b1 m + (1-b1) g ;  v = b2 v + (1-b2) g^2
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
class AdamW {
 public:
  explicit AdamW(AdamWOptions options) : opt_(options) {}

  /// One step over all blocks; block i keeps its own moments.
  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);
  void step(EncoderParams& params, const EncoderParams& grads);

  std::uint64_t steps() const noexcept { return t_; }

 private:

  AdamWOptions opt_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fsed
