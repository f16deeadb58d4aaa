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

// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsed/binary_io.hpp"
#include "fsed/contrastive.hpp"
#include "fsed/dataset.hpp"
#include "fsed/errors.hpp"
#include "fsed/metrics.hpp"
#include "fsed/protonet.hpp"
#include "fsed/sampler.hpp"
#include "fsed/threshold.hpp"
#include "fsed/trainer.hpp"
#include "fsed/verify.hpp"
#include "oracles.hpp"

namespace fsed {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Tensor t({rows, cols});
  for (double& v : t.values()) v = g(rng);
  return t;
}

// Finite-difference checks of every loss on >= 100 small random episodes.
void gradient_oracle_suite(Outcome& out) {
  const auto start = Clock::now();
  const auto reports = run_gradcheck_suite(2026, 200);
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  std::size_t fewest = SIZE_MAX;
  for (const auto& r : reports) {
    if (r.name.find("finite differences") == std::string::npos) continue;
    worst = std::max(worst, r.max_error);
    fewest = std::min(fewest, r.instances);
    out.check(r.max_error <= 1e-5, r.name);
  }
  out.check(fewest >= 100, "fewer than 100 episodes in some check");
  out.check(elapsed < 10.0, "runtime >= 10 s");
  out.detail << "max_rel_err=" << worst << " min_episodes=" << fewest << " runtime_s=" << elapsed;
}

// Closed-form dot-metric CE gradients against the tape, the coincident
// prototype case, and the bottleneck probe.
void closed_form_equivalence(Outcome& out) {
  Rng rng(404);
  std::uniform_int_distribution<std::size_t> classes_dist(2, 6), dim_dist(2, 12);
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t classes = classes_dist(rng), d = dim_dist(rng);
    const Tensor protos = random_tensor(rng, classes, d);
    const Tensor h = random_tensor(rng, 1, d);
    const auto label = static_cast<LocalLabel>(std::uniform_int_distribution<std::size_t>(0, classes - 1)(rng));
    worst = std::max(worst, ce_grads_analytic(h.values(), protos, label).max_abs_discrepancy);
  }
  out.check(worst <= 1e-8, "closed form vs autodiff");

  bool exact_zero = true;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t d = dim_dist(rng);
    const Tensor row = random_tensor(rng, 1, d);
    Tensor protos({4, d});
    for (std::size_t c = 0; c < 4; ++c) std::copy(row.values().begin(), row.values().end(), protos.row(c).begin());
    const Tensor h = random_tensor(rng, 1, d);
    const GradientReport r = ce_grads_analytic(h.values(), protos, static_cast<LocalLabel>(inst % 4));
    for (double v : r.dh.values()) exact_zero = exact_zero && v == 0.0;
  }
  out.check(exact_zero, "coincident prototypes give nonzero dL/dh");

  std::vector<double> seps;
  for (int i = 20; i >= 0; --i) seps.push_back(i / 20.0);
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rows = bottleneck_probe(seps, seed);
    for (std::size_t i = 1; i < rows.size(); ++i) violations += rows[i].grad_norm > rows[i - 1].grad_norm;
    out.check(rows.back().grad_norm == 0.0, "norm at zero separation");
  }
  out.check(violations == 0, "bottleneck monotonicity");
  out.detail << "max_abs_diff=" << worst << " instances=1000 degenerate_exact=" << (exact_zero ? "yes" : "no")
             << " bottleneck_violations=" << violations << "/100 seeds";
}

// SSCL and PQCL against naive loop implementations.
void brute_force_loss_oracles(Outcome& out) {
  double worst_sscl = 0.0, worst_pqcl = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(seed, Stream::kSynth, 99);
    std::uniform_int_distribution<std::size_t> ways(1, 5), per(1, 4), dim(2, 16);
    const std::size_t classes = ways(rng) + 1, d = dim(rng);
    std::vector<LocalLabel> y;
    for (std::size_t c = 0; c < classes; ++c) y.insert(y.end(), per(rng), static_cast<LocalLabel>(c));
    y.insert(y.end(), 1, y.front());  // at least one positive pair
    std::shuffle(y.begin(), y.end(), rng);
    const Tensor z = testing::unit_rows(random_tensor(rng, y.size(), d));
    const Tensor protos = random_tensor(rng, classes, d, 0.4);
    for (double tau : {0.1, 0.3, 1.0}) {
      worst_sscl = std::max(worst_sscl, std::abs(sscl_loss(z, y, tau) - testing::sscl_oracle(z, y, tau)));
      worst_pqcl =
          std::max(worst_pqcl, std::abs(pqcl_loss(protos, z, y, tau) - testing::pqcl_oracle(protos, z, y, tau)));
    }
  }
  out.check(worst_sscl <= 1e-10, "sscl");
  out.check(worst_pqcl <= 1e-10, "pqcl");
  out.detail << "sscl_max_diff=" << worst_sscl << " pqcl_max_diff=" << worst_pqcl << " episodes=100";
}

// Stress-overlap corpus: a fifth of the O tokens sit near event centers.
SynthSpec stress_spec(std::size_t classes, std::size_t first_class) {
  SynthSpec s;
  s.class_count = classes;
  s.first_class = first_class;
  s.sentences_per_class = 20;
  s.sentence_length = 10;
  s.d_in = 16;
  s.cluster_separation = 4.0;
  s.o_noise_scale = 1.0;
  s.trigger_noise_scale = 0.5;
  s.overlap_fraction = 0.2;
  return s;
}

RunSummary run_variant(const Config& config, const Dataset& train, const Dataset& valid, const Dataset& test,
                       Outcome& out) {
  const RunSummary s = run_experiment(config, train, &valid, test).summary;
  std::vector<double> f1, p, r;
  for (const auto& m : s.runs) {
    f1.push_back(m.f1);
    p.push_back(m.precision);
    r.push_back(m.recall);
  }
  out.detail << variant_name(config) << "(F1=" << median(f1) << " P=" << median(p) << " R=" << median(r) << ") ";
  return s;
}

double median_of(const RunSummary& s, double EvalMetrics::*field) {
  std::vector<double> v;
  for (const auto& m : s.runs) v.push_back(m.*field);
  return median(v);
}

void synthetic_ablation_ordering(Outcome& out) {
  const auto start = Clock::now();
  const Dataset train = synth_dataset(stress_spec(20, 0), 11);
  const Dataset valid = synth_dataset(stress_spec(10, 20), 12);
  const Dataset test = synth_dataset(stress_spec(10, 30), 13);
  check_disjoint_labels({&train, &valid, &test});

  Config full;  // 5-way-5-shot, 2000 iterations, 5 seeds
  full.n_way = 5;
  full.k_shot = 5;
  full.train_iterations = 2000;
  full.runs = 5;
  Config no_tat = full;
  no_tat.tat_enabled = false;
  Config proto = no_tat;
  proto.contrastive.alpha = 0.0;
  proto.contrastive.beta = 0.0;

  const RunSummary s_full = run_variant(full, train, valid, test, out);
  const RunSummary s_no_tat = run_variant(no_tat, train, valid, test, out);
  const RunSummary s_proto = run_variant(proto, train, valid, test, out);
  const double elapsed = seconds_since(start);

  out.check(median_of(s_full, &EvalMetrics::f1) >= median_of(s_proto, &EvalMetrics::f1), "F1 full >= proto");
  out.check(median_of(s_no_tat, &EvalMetrics::recall) >= median_of(s_full, &EvalMetrics::recall),
            "recall w/o-tat >= full");
  out.check(median_of(s_no_tat, &EvalMetrics::precision) <= median_of(s_full, &EvalMetrics::precision),
            "precision w/o-tat <= full");
  out.check(elapsed < 300.0, "runtime >= 5 min");
  out.detail << "runtime_s=" << elapsed;
}

void tat_invariants(Outcome& out) {
  Rng rng(31);
  std::size_t below = 0, argmax_mismatch = 0;
  double worst_mean = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t queries = 1 + trial % 40, classes = 2 + trial % 6;
    const ProbMatrix p = classify(random_tensor(rng, queries, 4, 1.5), random_tensor(rng, classes, 4, 1.5),
                                  Metric::kSquaredEuclidean);
    const Threshold t = compute_threshold(p);
    double column = 0.0;
    for (std::size_t r = 0; r < queries; ++r) column += p.probs.at(r, 0);
    worst_mean = std::max(worst_mean, std::abs(t.t_meta - column / static_cast<double>(queries)));

    const auto tat = predict_with_threshold(p, t);
    for (std::size_t r = 0; r < queries; ++r) below += tat[r] != 0 && p.probs.at(r, tat[r]) < t.t_meta;
    argmax_mismatch += predict_with_threshold(p, {0.0}) != argmax_rows(p);
  }
  out.check(below == 0, "event predicted below t_meta");
  out.check(argmax_mismatch == 0, "t_meta=0 differs from argmax");
  out.check(worst_mean <= 1e-12, "threshold vs column mean");
  out.detail << "below_threshold=" << below << " argmax_mismatch=" << argmax_mismatch
             << " column_mean_diff=" << worst_mean << " matrices=500";
}

void protocol_invariants(Outcome& out) {
  const Dataset train = synth_dataset(stress_spec(12, 0), 5);
  const Dataset test = synth_dataset(stress_spec(8, 12), 6);
  const ClassIndex index(train);

  std::size_t nondeterministic = 0, overlapping = 0;
  for (std::uint64_t e = 0; e < 200; ++e) {
    Rng a = make_rng(77, Stream::kTrainEpisodes, e), b = make_rng(77, Stream::kTrainEpisodes, e);
    const Episode ep = sample_episode(train, index, 5, 5, 2, a);
    nondeterministic += !(ep == sample_episode(train, index, 5, 5, 2, b));
    const std::set<std::size_t> support(ep.support.begin(), ep.support.end());
    for (std::size_t q : ep.query) overlapping += support.count(q);
  }
  out.check(nondeterministic == 0, "episode determinism");
  out.check(overlapping == 0, "support/query disjointness");

  bool split_ok = true;
  try {
    check_disjoint_labels({&train, &test});
  } catch (const DataError&) {
    split_ok = false;
  }
  bool overlap_caught = false;
  try {
    const Dataset clash = synth_dataset(stress_spec(4, 10), 7);
    check_disjoint_labels({&train, &clash});
  } catch (const DataError&) {
    overlap_caught = true;
  }
  out.check(split_ok && overlap_caught, "train/test label disjointness");

  // Three hand-counted episodes: tp=4 fp=3 fn=2.
  const std::vector<std::vector<LocalLabel>> gold{{0, 1, 0, 2, 0}, {1, 0, 2, 2}, {0, 0, 3}};
  const std::vector<std::vector<LocalLabel>> pred{{0, 1, 1, 0, 0}, {2, 0, 2, 2}, {3, 0, 3}};
  Counts c;
  for (std::size_t e = 0; e < gold.size(); ++e) c += count_predictions(gold[e], pred[e]);
  const EvalMetrics m = EvalMetrics::from_counts(c);
  out.check(c == Counts{4, 3, 2}, "hand-counted confusion");
  out.check(m.precision == 4.0 / 7.0 && m.recall == 4.0 / 6.0 && std::abs(m.f1 - 8.0 / 13.0) <= 1e-15,
            "micro P/R/F1");
  out.detail << "episodes=200 nondeterministic=" << nondeterministic << " overlaps=" << overlapping
             << " micro=(" << m.precision << "," << m.recall << "," << m.f1 << ")";
}

void emb1_and_stats(Outcome& out) {
  const auto dir = std::filesystem::temp_directory_path() / "fsed_acceptance_emb1";
  std::filesystem::create_directories(dir);
  std::size_t fixtures = 0;
  for (std::size_t classes : {1, 5, 9}) {
    for (std::size_t length : {1, 7, 12}) {
      SynthSpec spec;
      spec.class_count = classes;
      spec.sentences_per_class = 3 + classes;
      spec.sentence_length = length;
      spec.d_in = 3 + length;
      const Dataset ds = synth_dataset(spec, 1000 + classes * 31 + length);
      const auto bytes = encode_emb1(ds);
      const auto path = dir / "fixture.emb1";
      io::write_file(path.string(), bytes);
      const Dataset loaded = load_emb1(path);
      write_emb1(loaded, dir / "again.emb1");
      out.check(encode_emb1(decode_emb1(bytes)) == bytes, "decode/encode bytes");
      out.check(io::read_file((dir / "again.emb1").string()) == bytes, "file bytes");

      const DatasetStats st = dataset_stats(loaded);
      out.check(st.class_count == classes, "class count");
      out.check(st.trigger_count == classes * spec.sentences_per_class, "trigger count");
      out.check(st.avg_sentence_length == static_cast<double>(length), "average length");
      ++fixtures;
    }
  }
  std::filesystem::remove_all(dir);
  out.detail << "fixtures=" << fixtures;
}

struct Criterion {
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace
}  // namespace fsed

int main(int argc, char** argv) {
  // Optional argument: run only criteria whose name contains it.
  const std::string filter = argc > 1 ? argv[1] : "";
  using namespace fsed;
  const Criterion criteria[] = {
      {"gradient oracle suite", gradient_oracle_suite},
      {"closed-form CE gradient equivalence", closed_form_equivalence},
      {"brute-force SSCL/PQCL oracles", brute_force_loss_oracles},
      {"synthetic ablation ordering", synthetic_ablation_ordering},
      {"TAT invariants", tat_invariants},
      {"protocol invariants", protocol_invariants},
      {"EMB1 round-trip and stats", emb1_and_stats},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (std::string(c.name).find(filter) == std::string::npos) continue;
    Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    failures += !out.passed;
    std::printf("%s %s: %s\n", out.passed ? "PASS" : "FAIL", c.name, out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
