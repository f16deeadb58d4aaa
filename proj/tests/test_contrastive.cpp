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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsed/contrastive.hpp"
#include "fsed/errors.hpp"
#include "fsed/tape.hpp"
#include "fsed/verify.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fsed {
namespace {

using testing::dot_rows;
using testing::pqcl_oracle;
using testing::sscl_oracle;
using testing::unit_rows;

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out(t.shape());
  for (std::size_t r = 0; r < perm.size(); ++r) std::copy(t.row(perm[r]).begin(), t.row(perm[r]).end(), out.row(r).begin());
  return out;
}

TEST(Sscl, OrthogonalPairsByHand) {
  const Tensor z = Tensor::matrix({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  const std::vector<LocalLabel> y{1, 1, 2, 2};
  const double e = std::exp(1.0);
  EXPECT_NEAR(sscl_loss(z, y, 1.0), 4 * -std::log(e / (e + 2)), 1e-14);
}

TEST(Sscl, AllIdenticalInstances) {
  const std::size_t m = 6;
  const Tensor z = unit_rows(Tensor({m, 3}, 1.0));
  const std::vector<LocalLabel> y{0, 0, 1, 1, 1, 2};
  // Anchors of classes 0 and 1 count; the lone class-2 anchor is skipped.
  EXPECT_NEAR(sscl_loss(z, y, 0.5), 5 * -std::log(1.0 / (m - 1)), 1e-12);
}

TEST(Sscl, NoPositivePairsRaises) {
  const std::vector<LocalLabel> y{0, 1, 2};
  EXPECT_FALSE(has_positive_pairs(y));
  EXPECT_THROW(sscl_loss(unit_rows(Tensor({3, 2}, 1.0)), y, 0.5), DataError);
}

TEST(Sscl, MatchesBruteForceOverHundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> count(3, 14), cls(0, 3);
    const std::size_t n = count(rng);
    std::vector<LocalLabel> y(n);
    for (auto& l : y) l = static_cast<LocalLabel>(cls(rng));
    y[1] = y[0];
    const Tensor z = unit_rows(testing::random_tensor(rng, n, 6));
    for (double tau : {0.1, 0.5, 1.0}) {
      EXPECT_NEAR(sscl_loss(z, y, tau), sscl_oracle(z, y, tau), 1e-10) << "seed " << seed << " tau " << tau;
    }
  }
}

TEST(Sscl, PermutationInvariant) {
  Rng rng(3);
  const std::vector<LocalLabel> y{0, 1, 1, 2, 0, 2, 2};
  const Tensor z = unit_rows(testing::random_tensor(rng, 7, 4));
  std::vector<std::size_t> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LocalLabel> py(7);
    for (std::size_t i = 0; i < 7; ++i) py[i] = y[perm[i]];
    EXPECT_NEAR(sscl_loss(permute_rows(z, perm), py, 0.5), sscl_loss(z, y, 0.5), 1e-9);
  }
}

TEST(Sscl, DecreasesWhenPositivePairMovesCloser) {
  // Rows 0 and 1 live in a plane orthogonal to every other row, so rotating
  // row 1 toward row 0 raises their similarity and leaves all others fixed.
  Rng rng(4);
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  const std::vector<LocalLabel> y{1, 1, 2, 2, 0, 0};
  for (int trial = 0; trial < 50; ++trial) {
    Tensor z = testing::random_tensor(rng, 6, 5);
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t k = 0; k < 2; ++k) z.at(r, k) = 0.0;
    }
    const double a0 = angle(rng), gap = angle(rng) + 0.01;
    z.at(0, 0) = std::cos(a0);
    z.at(0, 1) = std::sin(a0);
    for (std::size_t k = 2; k < 5; ++k) z.at(0, k) = z.at(1, k) = 0.0;
    z.at(1, 0) = 1.0;
    z = unit_rows(z);
    Tensor moved = z;
    for (Tensor* t : {&z, &moved}) {
      const double a1 = a0 + (t == &z ? gap : 0.9 * gap);
      t->at(1, 0) = std::cos(a1);
      t->at(1, 1) = std::sin(a1);
    }
    ASSERT_GT(dot_rows(moved, 0, moved, 1), dot_rows(z, 0, z, 1));
    EXPECT_LT(sscl_loss(moved, y, 0.5), sscl_loss(z, y, 0.5)) << "trial " << trial;
  }
}

TEST(Sscl, TapeMatchesTensorOverload) {
  Rng rng(9);
  const std::vector<LocalLabel> y{0, 0, 1, 1, 1};
  const Tensor z = unit_rows(testing::random_tensor(rng, 5, 3));
  Tape t;
  EXPECT_EQ(t.value(sscl_loss(t, t.leaf(z), y, 0.5)).item(), sscl_loss(z, y, 0.5));
}

TEST(Pqcl, SingleClassHasNoNegatives) {
  const Tensor protos = Tensor::matrix({{1, 0}});
  const Tensor q = Tensor::matrix({{0, 1}, {1, 0}});
  EXPECT_EQ(pqcl_loss(protos, q, std::vector<LocalLabel>{0, 0}, 0.1), 0.0);
}

TEST(Pqcl, OppositePrototypesByHand) {
  const Tensor protos = Tensor::matrix({{1, 0}, {-1, 0}});
  const Tensor q = Tensor::matrix({{1, 0}, {-1, 0}});
  const double e = std::exp(1.0);
  const double term = -std::log(e / (e + std::exp(-1.0)));
  EXPECT_NEAR(pqcl_loss(protos, q, std::vector<LocalLabel>{0, 1}, 1.0), 2 * term, 1e-14);
}

TEST(Pqcl, ClassWithoutQueryRaises) {
  const Tensor protos = Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}});
  const Tensor q = Tensor::matrix({{1, 0}, {0, 1}});
  EXPECT_THROW(pqcl_loss(protos, q, std::vector<LocalLabel>{0, 1}, 0.1), DataError);
}

TEST(Pqcl, MatchesBruteForceOverHundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    std::uniform_int_distribution<std::size_t> ways(1, 4), per(1, 3);
    const std::size_t classes = ways(rng) + 1;
    std::vector<LocalLabel> y;
    for (std::size_t c = 0; c < classes; ++c) y.insert(y.end(), per(rng), static_cast<LocalLabel>(c));
    std::shuffle(y.begin(), y.end(), rng);
    const Tensor protos = testing::random_tensor(rng, classes, 5, 0.4);
    const Tensor q = unit_rows(testing::random_tensor(rng, y.size(), 5));
    for (double tau : {0.1, 0.5}) {
      EXPECT_NEAR(pqcl_loss(protos, q, y, tau), pqcl_oracle(protos, q, y, tau), 1e-10)
          << "seed " << seed << " tau " << tau;
    }
  }
}

TEST(Pqcl, PermutationInvariant) {
  Rng rng(5);
  const std::vector<LocalLabel> y{0, 1, 2, 1, 0, 2};
  const Tensor protos = testing::random_tensor(rng, 3, 4, 0.5);
  const Tensor q = unit_rows(testing::random_tensor(rng, 6, 4));
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LocalLabel> py(6);
    for (std::size_t i = 0; i < 6; ++i) py[i] = y[perm[i]];
    EXPECT_NEAR(pqcl_loss(protos, permute_rows(q, perm), py, 0.1), pqcl_loss(protos, q, y, 0.1), 1e-9);
  }
}

class Hybrid : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(77);
    episode = random_episode_tensors(rng, 3, 2, 2, 6, 4);
    params = init_params(5, {6, 8, 6, 6, 4});
  }
  EpisodeTensors episode;
  EncoderParams params;
};

TEST_F(Hybrid, ZeroWeightsGiveCrossEntropyExactly) {
  ContrastiveConfig cc;
  cc.alpha = cc.beta = 0.0;
  const HybridResult r = hybrid_loss(params, episode, cc, Metric::kSquaredEuclidean);
  EXPECT_EQ(r.loss.total, r.loss.ce);
}

TEST_F(Hybrid, TotalRecomputesFromComponents) {
  const ContrastiveConfig cc;
  for (Metric m : {Metric::kSquaredEuclidean, Metric::kDot, Metric::kCosine}) {
    const HybridResult r = hybrid_loss(params, episode, cc, m);
    EXPECT_NEAR(r.loss.total, r.loss.ce + 0.5 * r.loss.sscl + 0.5 * r.loss.pqcl, 1e-12);
    EXPECT_GT(r.loss.sscl, 0.0);
    EXPECT_GT(r.loss.pqcl, 0.0);
  }
}

TEST_F(Hybrid, GradientIsWeightedSumOfComponentGradients) {
  auto grads_for = [&](double a, double b) {
    ContrastiveConfig cc;
    cc.alpha = a;
    cc.beta = b;
    return flatten(hybrid_loss(params, episode, cc, Metric::kSquaredEuclidean).grads);
  };
  const auto g_ce = grads_for(0, 0);
  const auto g_s = grads_for(1, 0);
  const auto g_p = grads_for(0, 1);
  const auto g_total = grads_for(0.5, 0.5);
  for (std::size_t i = 0; i < g_total.size(); ++i) {
    const double expect = g_ce[i] + 0.5 * (g_s[i] - g_ce[i]) + 0.5 * (g_p[i] - g_ce[i]);
    EXPECT_NEAR(g_total[i], expect, 1e-10);
  }
}

TEST_F(Hybrid, SkipsSsclWithoutPositivePairs) {
  Rng rng(3);
  const EpisodeTensors one_shot = random_episode_tensors(rng, 3, 1, 1, 6, 1);
  const HybridResult r = hybrid_loss(params, one_shot, ContrastiveConfig{}, Metric::kSquaredEuclidean);
  EXPECT_TRUE(r.sscl_skipped);
  EXPECT_EQ(r.loss.sscl, 0.0);
}

TEST(ContrastiveConfig, Validation) {
  ContrastiveConfig cc;
  EXPECT_NO_THROW(cc.validate());
  EXPECT_EQ(cc.cap(5), 5u);
  cc.o_subsample_cap = 2;
  EXPECT_EQ(cc.cap(5), 2u);
  cc.tau_pqcl = 0.0;
  EXPECT_THROW(cc.validate(), UsageError);
  cc = {};
  cc.alpha = -0.1;
  EXPECT_THROW(cc.validate(), UsageError);
  cc = {};
  cc.o_subsample_cap = 0;
  EXPECT_THROW(cc.validate(), UsageError);
}

}  // namespace
}  // namespace fsed
