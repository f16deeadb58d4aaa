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

#include "fsed/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsed::kernels {
namespace {

// Row kernels shared by the serial and OpenMP paths.

inline void row_nn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p];
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
  }
}

inline void row_nt(const double* a, const double* b, double* c, std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    // Four independent partial sums break the add dependency chain.
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      acc[0] += a[p] * brow[p];
      acc[1] += a[p + 1] * brow[p + 1];
      acc[2] += a[p + 2] * brow[p + 2];
      acc[3] += a[p + 3] * brow[p + 3];
    }
    for (; p < k; ++p) acc[0] += a[p] * brow[p];
    c[j] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
  }
}

inline void row_tn(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t i, std::size_t m,
                   std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
  }
}

inline void row_sqdist(const double* a, const double* b, double* d, std::size_t m, std::size_t dim) {
  for (std::size_t j = 0; j < m; ++j) {
    const double* brow = b + j * dim;
    double acc = 0.0;
    for (std::size_t p = 0; p < dim; ++p) {
      const double diff = a[p] - brow[p];
      acc += diff * diff;
    }
    d[j] = acc;
  }
}

using Index = long long;

}  // namespace

namespace serial {

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_nn(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_nt(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_tn(a.data(), b.data(), c.data() + i * n, i, m, k, n);
}

void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim) {
  for (std::size_t i = 0; i < n; ++i) row_sqdist(a.data() + i * dim, b.data(), d.data() + i * m, m, dim);
}

}  // namespace serial

namespace omp {

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    row_nn(a.data() + i * k, b.data(), c.data() + i * n, k, n);
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    row_nt(a.data() + i * k, b.data(), c.data() + i * n, k, n);
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    row_tn(a.data(), b.data(), c.data() + i * n, static_cast<std::size_t>(i), m, k, n);
  }
}

void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    row_sqdist(a.data() + i * dim, b.data(), d.data() + i * m, m, dim);
  }
}

}  // namespace omp

namespace {
bool go_parallel(std::size_t work) { return work >= kParallelThreshold && max_threads() > 1; }
}  // namespace

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    omp::matmul_nn(a, b, c, m, k, n);
  } else {
    serial::matmul_nn(a, b, c, m, k, n);
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    omp::matmul_nt(a, b, c, m, k, n);
  } else {
    serial::matmul_nt(a, b, c, m, k, n);
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    omp::matmul_tn(a, b, c, m, k, n);
  } else {
    serial::matmul_tn(a, b, c, m, k, n);
  }
}

void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim) {
  if (go_parallel(n * m * dim)) {
    omp::pairwise_sqdist(a, b, d, n, m, dim);
  } else {
    serial::pairwise_sqdist(a, b, d, n, m, dim);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace fsed::kernels
