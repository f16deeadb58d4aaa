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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fsed {

/// A scalar function that also reports its analytic gradient. `grad` is
/// resized and filled when non-null.
using GradFunction = std::function<double(std::span<const double> x, std::vector<double>* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

/// Compares the analytic gradient against central differences:
/// max_i |g_i - fd_i| / max(1, |fd_i|). Throws NumericError naming the
/// perturbed coordinate if any evaluation is non-finite.
GradCheckResult grad_check(const GradFunction& f, std::span<const double> point,
                           double step = 1e-5);

/// Central-difference gradient on its own.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> point, double step = 1e-5);

}  // namespace fsed
