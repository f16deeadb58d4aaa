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

#include <sstream>

#include "fsed/kernels.hpp"
#include "fsed/trainer.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace fsed {
namespace {

struct Splits {
  Dataset train, valid, test;
};

Splits make_splits(double separation = 4.0, double overlap = 0.0, std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.class_count = 8;
  spec.sentences_per_class = 12;
  spec.sentence_length = 8;
  spec.d_in = 8;
  spec.cluster_separation = separation;
  spec.overlap_fraction = overlap;
  Splits s;
  s.train = synth_dataset(spec, seed);
  spec.first_class = 8;
  spec.class_count = 6;
  s.valid = synth_dataset(spec, seed + 1);
  spec.first_class = 14;
  s.test = synth_dataset(spec, seed + 2);
  return s;
}

Config small_config() {
  Config c;
  c.dims = {0, 16, 8, 8, 8};
  c.train_iterations = 30;
  c.val_every = 10;
  c.val_episodes = 8;
  c.eval_episodes = 16;
  c.runs = 2;
  c.learning_rate = 5e-3;
  return c;
}

void expect_same_log(const TrainLog& a, const TrainLog& b) {
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].iteration, b.iterations[i].iteration);
    EXPECT_EQ(a.iterations[i].loss.total, b.iterations[i].loss.total);
    EXPECT_EQ(a.iterations[i].loss.ce, b.iterations[i].loss.ce);
    EXPECT_EQ(a.iterations[i].episode_digest, b.iterations[i].episode_digest);
  }
  ASSERT_EQ(a.validations.size(), b.validations.size());
  for (std::size_t i = 0; i < a.validations.size(); ++i) {
    EXPECT_EQ(a.validations[i].metrics.counts, b.validations[i].metrics.counts);
  }
  EXPECT_EQ(a.best_iteration, b.best_iteration);
}

TEST(Train, ZeroIterationsReturnsInitialParams) {
  const Splits s = make_splits();
  Config c = small_config();
  c.train_iterations = 0;
  const TrainResult r = train(c, s.train, &s.valid);
  EXPECT_EQ(r.params, init_params(derive_seed(c.seed, Stream::kInit), resolve_dims(c, s.train)));
  EXPECT_TRUE(r.log.iterations.empty());
  EXPECT_EQ(r.log.best_iteration, 0u);
}

TEST(Train, DeterministicAcrossRerunsAndThreadCounts) {
  const Splits s = make_splits();
  const Config c = small_config();
  const int saved = kernels::max_threads();
  kernels::set_threads(1);
  const TrainResult a = train(c, s.train, &s.valid);
  kernels::set_threads(4);
  const TrainResult b = train(c, s.train, &s.valid);
  kernels::set_threads(saved);
  expect_same_log(a.log, b.log);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t i = 1; i < a.log.iterations.size(); ++i) {
    EXPECT_LT(a.log.iterations[i - 1].iteration, a.log.iterations[i].iteration);
  }
}

TEST(Train, ValidationCadenceAndBestCheckpoint) {
  const Splits s = make_splits();
  Config c = small_config();
  c.train_iterations = 25;
  const TrainResult r = train(c, s.train, &s.valid);
  ASSERT_EQ(r.log.validations.size(), 3u);
  EXPECT_EQ(r.log.validations[0].iteration, 10u);
  EXPECT_EQ(r.log.validations[2].iteration, 25u);
  double best = -1;
  std::size_t best_it = 0;
  for (const auto& v : r.log.validations) {
    if (v.metrics.f1 > best) {
      best = v.metrics.f1;
      best_it = v.iteration;
    }
  }
  EXPECT_EQ(r.log.best_iteration, best_it);
  const EvalMetrics again = evaluate(r.params, c, s.valid, Stream::kValidEpisodes, c.val_episodes, c.seed);
  EXPECT_EQ(again.f1, best);
}

TEST(Train, LossFallsOnSeparableData) {
  const Splits s = make_splits(8.0);
  std::vector<double> first, late;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Config c = small_config();
    c.seed = seed;
    c.train_iterations = 200;
    const TrainResult r = train(c, s.train, nullptr);
    first.push_back(r.log.iterations.front().loss.total);
    late.push_back(r.log.iterations[199].loss.total);
  }
  EXPECT_LT(median(late), median(first));
}

TEST(Train, OverlappingLabelSetsRejected) {
  const Splits s = make_splits();
  EXPECT_THROW(train(small_config(), s.train, &s.train), DataError);
}

TEST(Train, DivergenceReportsIteration) {
  const Splits s = make_splits();
  Config c = small_config();
  c.learning_rate = 1e150;
  c.contrastive.alpha = c.contrastive.beta = 0.0;
  c.metric = Metric::kDot;
  try {
    train(c, s.train, nullptr);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_GE(e.iteration(), 1u);
    EXPECT_TRUE(std::isfinite(e.last_finite().total));
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Evaluate, ParallelMatchesSerialBitwise) {
  const Splits s = make_splits(3.0, 0.3);
  const Config c = small_config();
  const EncoderParams p = init_params(4, resolve_dims(c, s.test));
  const EvalMetrics serial = evaluate_serial(p, c, s.test, Stream::kTestEpisodes, 40, 9);
  const int saved = kernels::max_threads();
  for (int threads : {1, 2, 4}) {
    kernels::set_threads(threads);
    const EvalMetrics par = evaluate(p, c, s.test, Stream::kTestEpisodes, 40, 9);
    EXPECT_EQ(par.counts, serial.counts);
    EXPECT_EQ(par.f1, serial.f1);
  }
  kernels::set_threads(saved);
}

TEST(Evaluate, TatOnlyRemovesEventPredictions) {
  const Splits s = make_splits(3.0, 0.4);
  Config c = small_config();
  const EncoderParams p = init_params(2, resolve_dims(c, s.test));
  const EvalMetrics with = evaluate(p, c, s.test, Stream::kTestEpisodes, 30, 3);
  c.tat_enabled = false;
  const EvalMetrics without = evaluate(p, c, s.test, Stream::kTestEpisodes, 30, 3);
  EXPECT_LE(with.counts.tp + with.counts.fp, without.counts.tp + without.counts.fp);
  EXPECT_LE(with.counts.tp, without.counts.tp);
}

TEST(Ablation, VariantConfigAlgebra) {
  const Config base = small_config();
  const auto v = ablation_variants(base);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(variant_name(v[0]), "hcl-tat");
  EXPECT_EQ(variant_name(v[1]), "w/o-sscl");
  EXPECT_EQ(variant_name(v[2]), "w/o-pqcl");
  EXPECT_EQ(variant_name(v[3]), "w/o-hcl");
  EXPECT_EQ(variant_name(v[4]), "w/o-tat");
  Config expect = base;
  expect.contrastive.alpha = expect.contrastive.beta = 0.0;
  EXPECT_EQ(config_text(v[3]), config_text(expect));
  for (const auto& c : v) EXPECT_EQ(c.seed, base.seed);
}

TEST(Ablation, VariantsSeeIdenticalEpisodes) {
  const Splits s = make_splits();
  Config base = small_config();
  base.train_iterations = 12;
  std::vector<std::vector<std::uint64_t>> digests;
  for (const Config& c : ablation_variants(base)) {
    const TrainResult r = train(c, s.train, &s.valid);
    digests.emplace_back();
    for (const auto& it : r.log.iterations) digests.back().push_back(it.episode_digest);
  }
  for (const auto& d : digests) EXPECT_EQ(d, digests.front());
}

TEST(Ablation, CsvHasOneRowPerVariant) {
  const Splits s = make_splits();
  Config base = small_config();
  base.train_iterations = 5;
  base.runs = 2;
  const auto rows = ablate(base, s.train, &s.valid, s.test);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) EXPECT_EQ(r.result.summary.runs.size(), 2u);
  const std::string csv = ablation_csv(rows);
  EXPECT_NE(csv.find("variant,runs,P_mean,P_std,R_mean,R_std,F1_mean,F1_std\n"), std::string::npos);
  EXPECT_NE(csv.find("# seed = 42\n"), std::string::npos);
  EXPECT_NE(csv.find("\nw/o-tat,2,"), std::string::npos);
}

TEST(Experiment, RunsUseDerivedSeeds) {
  const Config c = small_config();
  EXPECT_NE(run_seed(c, 0), run_seed(c, 1));
  EXPECT_EQ(run_seed(c, 3), derive_seed(c.seed, Stream::kRuns, 3));
}

TEST(Log, JsonLinesLayout) {
  const Splits s = make_splits();
  Config c = small_config();
  c.train_iterations = 12;
  const TrainResult r = train(c, s.train, &s.valid);
  std::istringstream in(train_log_jsonl(r.log, c));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0]["type"], "config");
  EXPECT_NE(rows[0]["config"].get<std::string>().find("seed = 42\n"), std::string::npos);
  EXPECT_EQ(rows[0]["variant"], "hcl-tat");
  EXPECT_EQ(rows[1]["iteration"], 1);
  EXPECT_TRUE(rows[10].contains("validation"));
  EXPECT_FALSE(rows[9].contains("validation"));
  const auto& l = rows[5];
  EXPECT_NEAR(l["total"].get<double>(),
              l["ce"].get<double>() + 0.5 * l["sscl"].get<double>() + 0.5 * l["pqcl"].get<double>(), 1e-12);
}

TEST(Log, MetricsCsv) {
  EvalMetrics m;
  m.precision = 0.5;
  m.recall = 0.25;
  m.f1 = 1.0 / 3.0;
  const std::string csv = metrics_csv("hcl-tat", RunSummary::aggregate({m}));
  EXPECT_EQ(csv, "variant,runs,P_mean,P_std,R_mean,R_std,F1_mean,F1_std\nhcl-tat,1,0.500000,0.000000,0.250000,0.000000,0.333333,0.000000\n");
}

}  // namespace
}  // namespace fsed
