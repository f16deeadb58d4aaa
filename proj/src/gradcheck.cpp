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

#include "fsed/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsed/errors.hpp"

namespace fsed {
namespace {

double checked(double v, std::size_t coordinate) {
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: non-finite evaluation when perturbing coordinate " +
                           std::to_string(coordinate),
                       coordinate);
  }
  return v;
}

}  // namespace

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> point, double step) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = checked(f(x), i);
    x[i] = saved - step;
    const double down = checked(f(x), i);
    x[i] = saved;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

GradCheckResult grad_check(const GradFunction& f, std::span<const double> point, double step) {
  std::vector<double> analytic;
  checked(f(point, &analytic), NumericError::kNoIndex);
  if (analytic.size() != point.size()) {
    throw ShapeError("grad_check", "gradient has " + std::to_string(analytic.size()) +
                                       " entries for a point of " + std::to_string(point.size()));
  }
  const auto numeric = numeric_gradient(
      [&](std::span<const double> x) { return f(x, nullptr); }, point, step);

  GradCheckResult result;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(numeric[i]));
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace fsed
