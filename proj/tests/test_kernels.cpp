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

#include <gtest/gtest.h>

#include <vector>

#include "fsed/kernels.hpp"
#include "test_util.hpp"

namespace fsed {
namespace {

namespace k = kernels;

struct KernelCase {
  std::size_t m, kk, n;
};

class KernelParity : public ::testing::TestWithParam<KernelCase> {};

// The OpenMP kernels split rows across threads but run the same per-row code,
// so results must be bitwise identical to the serial reference.
TEST_P(KernelParity, MatmulVariantsBitwiseEqual) {
  const auto [m, kk, n] = GetParam();
  Rng rng(m * 131 + n);
  const Tensor a = testing::random_tensor(rng, m, kk);
  const Tensor b = testing::random_tensor(rng, kk, n);
  const Tensor bt = testing::random_tensor(rng, n, kk);
  const Tensor at = testing::random_tensor(rng, kk, m);
  const int saved = k::max_threads();
  for (int threads : {1, 2, 4}) {
    k::set_threads(threads);
    std::vector<double> s(m * n, 0.5), p(m * n, 0.5);
    k::serial::matmul_nn(a.data(), b.data(), s, m, kk, n);
    k::omp::matmul_nn(a.data(), b.data(), p, m, kk, n);
    EXPECT_EQ(s, p);
    s.assign(m * n, 0.0);
    p.assign(m * n, 0.0);
    k::serial::matmul_nt(a.data(), bt.data(), s, m, kk, n);
    k::omp::matmul_nt(a.data(), bt.data(), p, m, kk, n);
    EXPECT_EQ(s, p);
    s.assign(m * n, 0.0);
    p.assign(m * n, 0.0);
    k::serial::matmul_tn(at.data(), b.data(), s, m, kk, n);
    k::omp::matmul_tn(at.data(), b.data(), p, m, kk, n);
    EXPECT_EQ(s, p);
    s.assign(m * n, 0.0);
    p.assign(m * n, 0.0);
    k::serial::pairwise_sqdist(a.data(), bt.data(), s, m, n, kk);
    k::omp::pairwise_sqdist(a.data(), bt.data(), p, m, n, kk);
    EXPECT_EQ(s, p);
  }
  k::set_threads(saved);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelParity,
                         ::testing::Values(KernelCase{1, 1, 1}, KernelCase{3, 5, 2}, KernelCase{17, 9, 33},
                                           KernelCase{128, 64, 96}, KernelCase{300, 40, 250}));

TEST(Kernels, MatmulAgainstNaiveLoop) {
  Rng rng(5);
  const std::size_t m = 7, kk = 4, n = 5;
  const Tensor a = testing::random_tensor(rng, m, kk);
  const Tensor b = testing::random_tensor(rng, kk, n);
  std::vector<double> c(m * n, 0.0);
  k::matmul_nn(a.data(), b.data(), c, m, kk, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t q = 0; q < kk; ++q) s += a.at(i, q) * b.at(q, j);
      EXPECT_NEAR(c[i * n + j], s, 1e-13);
    }
  }
}

TEST(Kernels, SqdistAgainstNaiveLoop) {
  const Tensor a = Tensor::matrix({{0, 0}, {1, 2}});
  const Tensor b = Tensor::matrix({{3, 4}, {1, 2}, {0, 0}});
  std::vector<double> d(6);
  k::pairwise_sqdist(a.data(), b.data(), d, 2, 3, 2);
  EXPECT_EQ(d, (std::vector<double>{25, 5, 0, 8, 0, 5}));
}

}  // namespace
}  // namespace fsed
