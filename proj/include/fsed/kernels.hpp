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

// Dense kernels behind the tape primitives and the evaluation loop.
//
// Each kernel exists twice: a plain serial loop kept as the reference, and an
// OpenMP version that splits output rows across threads. Both run the exact
// same per-row arithmetic, so results are bitwise identical for any thread
// count. The unqualified entry points pick the parallel path above a work
// threshold.

#include <cstddef>
#include <span>

namespace fsed::kernels {

/// Work (multiply-adds) below which the dispatching kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1 << 16;

namespace serial {
// C (m x n) += A (m x k) * B (k x n)
void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// C (m x n) += A (m x k) * B^T, B is (n x k)
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// C (m x n) += A^T * B, A is (k x m), B is (k x n)
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
// D (n x m) = squared euclidean distance between rows of A (n x d) and B (m x d)
void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim);
}  // namespace serial

namespace omp {
void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim);
}  // namespace omp

void matmul_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
               std::size_t m, std::size_t k, std::size_t n);
void pairwise_sqdist(std::span<const double> a, std::span<const double> b, std::span<double> d,
                     std::size_t n, std::size_t m, std::size_t dim);

/// Threads the parallel kernels will use (1 without OpenMP).
int max_threads();
/// Overrides the OpenMP thread count; no-op without OpenMP.
void set_threads(int n);

}  // namespace fsed::kernels
