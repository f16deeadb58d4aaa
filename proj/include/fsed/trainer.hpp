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
#include <functional>
#include <string>
#include <vector>

#include "fsed/config.hpp"
#include "fsed/contrastive.hpp"
#include "fsed/dataset.hpp"
#include "fsed/encoder.hpp"
#include "fsed/episode.hpp"
#include "fsed/errors.hpp"
#include "fsed/metrics.hpp"
#include "fsed/rng.hpp"
#include "fsed/sampler.hpp"

namespace fsed {

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  LossBreakdown loss;
  double wall_ms = 0.0;
  std::uint64_t episode_digest = 0;
  bool sscl_skipped = false;
};

struct ValidationRecord {
  std::size_t iteration = 0;
  EvalMetrics metrics;
};

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<ValidationRecord> validations;
  std::size_t best_iteration = 0;  // 0: the returned params are the initial ones
};

struct TrainResult {
  EncoderParams params;
  TrainLog log;
};

/// A non-finite loss or gradient during training.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t iteration, LossBreakdown last_finite, const std::string& cause)
      : NumericError("training diverged at iteration " + std::to_string(iteration) + ": " + cause, iteration),
        iteration_(iteration),
        last_finite_(last_finite) {}
  std::size_t iteration() const noexcept { return iteration_; }
  const LossBreakdown& last_finite() const noexcept { return last_finite_; }

 private:
  std::size_t iteration_;
  LossBreakdown last_finite_;
};

using ProgressFn = std::function<void(const IterationRecord&, const ValidationRecord*)>;

/// Hash of an episode's class map and sentence choice.
std::uint64_t episode_digest(const Episode& episode);

/// Episode `index` of `stream` under `seed`, ready for the losses.
EpisodeTensors make_episode(const Dataset& dataset, const ClassIndex& index, const Config& config,
                            std::uint64_t seed, Stream stream, std::size_t episode_index,
                            Episode* episode = nullptr);

/// Input width the encoder will use: config.dims.d_in, or the data's.
EncoderDims resolve_dims(const Config& config, const Dataset& data);

/// Episodic AdamW training on the hybrid objective. Validation runs every
/// val_every iterations and after the last one; the parameters with the
/// best validation F1 (earliest on ties) are returned. Without a validation
/// set the final parameters are returned.
TrainResult train(const Config& config, const Dataset& train_set, const Dataset* valid_set,
                  const ProgressFn& progress = {});

/// Counts for one episode: classify queries against support prototypes,
/// optionally through the task-adaptive threshold.
Counts evaluate_episode(const EncoderParams& params, const Config& config, const EpisodeTensors& episode);

/// Pooled micro P/R/F1 over `episodes` episodes of `stream`. Episodes are
/// spread over OpenMP threads; counts are integer sums, so the result does
/// not depend on the thread count.
EvalMetrics evaluate(const EncoderParams& params, const Config& config, const Dataset& dataset,
                     Stream stream, std::size_t episodes, std::uint64_t seed);
/// Serial reference of evaluate().
EvalMetrics evaluate_serial(const EncoderParams& params, const Config& config, const Dataset& dataset,
                            Stream stream, std::size_t episodes, std::uint64_t seed);
/// Test-split evaluation with config.eval_episodes under config.seed.
EvalMetrics evaluate(const EncoderParams& params, const Config& config, const Dataset& test_set);

/// Seed of run r under config.seed.
std::uint64_t run_seed(const Config& config, std::size_t run);

struct ExperimentResult {
  RunSummary summary;
  std::vector<TrainLog> logs;
};

/// config.runs independent train+test runs, aggregated.
ExperimentResult run_experiment(const Config& config, const Dataset& train_set, const Dataset* valid_set,
                                const Dataset& test_set);

struct AblationRow {
  std::string variant;
  Config config;
  ExperimentResult result;
};

/// full, w/o SSCL (alpha=0), w/o PQCL (beta=0), w/o HCL (alpha=beta=0), w/o TAT.
std::vector<Config> ablation_variants(const Config& base);
std::vector<AblationRow> ablate(const Config& base, const Dataset& train_set, const Dataset* valid_set,
                                const Dataset& test_set);

std::string metrics_csv(const std::string& variant, const RunSummary& summary);
std::string ablation_csv(const std::vector<AblationRow>& rows);
/// One JSON object per line: a config header, then one record per iteration.
std::string train_log_jsonl(const TrainLog& log, const Config& config);

}  // namespace fsed
