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

// Independent naive implementations used as oracles for the loss code.

#include <cmath>
#include <vector>

#include "fsed/episode.hpp"
#include "fsed/tensor.hpp"

namespace fsed::testing {

inline double dot_rows(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double s = 0;
  for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(j, k);
  return s;
}

// Naive double loop, no stabilization beyond what the unit-norm inputs allow.
inline double sscl_oracle(const Tensor& z, const std::vector<LocalLabel>& y, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double denom = 0;
    std::size_t positives = 0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (k == i) continue;
      denom += std::exp(dot_rows(z, i, z, k) / tau);
      if (y[k] == y[i]) ++positives;
    }
    if (positives == 0) continue;
    double term = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (j == i || y[j] != y[i]) continue;
      term += -std::log(std::exp(dot_rows(z, i, z, j) / tau) / denom);
    }
    total += term / static_cast<double>(positives);
  }
  return total;
}

inline double pqcl_oracle(const Tensor& protos, const Tensor& q, const std::vector<LocalLabel>& y, double tau) {
  double total = 0;
  for (std::size_t c = 0; c < protos.rows(); ++c) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != c) continue;
      const double pos = std::exp(dot_rows(protos, c, q, i) / tau);
      double neg = 0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] != c) neg += std::exp(dot_rows(protos, c, q, k) / tau);
      }
      total += -std::log(pos / (pos + neg));
    }
  }
  return total;
}

inline Tensor unit_rows(Tensor t) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sq = 0;
    for (double v : t.row(r)) sq += v * v;
    for (double& v : t.row(r)) v /= std::sqrt(sq);
  }
  return t;
}

}  // namespace fsed::testing
