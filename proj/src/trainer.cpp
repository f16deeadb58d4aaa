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

#include "fsed/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>

#include "json.hpp"

#include "fsed/adamw.hpp"
#include "fsed/kernels.hpp"
#include "fsed/threshold.hpp"

namespace fsed {
namespace {

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.ce) && std::isfinite(l.sscl) && std::isfinite(l.pqcl) && std::isfinite(l.total);
}

bool finite(const EncoderParams& p) {
  for (const Tensor* t : p.blocks()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

EvalMetrics evaluate_impl(const EncoderParams& params, const Config& config, const Dataset& dataset,
                          Stream stream, std::size_t episodes, std::uint64_t seed, bool parallel) {
  const ClassIndex index(dataset);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  // Exceptions must not cross the parallel region; keep the lowest-index one.
  std::optional<std::size_t> failed_at;
  std::exception_ptr failure;

  auto run_one = [&](std::size_t e) -> Counts {
    try {
      return evaluate_episode(params, config, make_episode(dataset, index, config, seed, stream, e));
    } catch (...) {
#pragma omp critical(fsed_eval_failure)
      if (!failed_at || e < *failed_at) {
        failed_at = e;
        failure = std::current_exception();
      }
      return {};
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic) reduction(+ : tp, fp, fn)
    for (long long e = 0; e < static_cast<long long>(episodes); ++e) {
      const Counts c = run_one(static_cast<std::size_t>(e));
      tp += c.tp;
      fp += c.fp;
      fn += c.fn;
    }
  } else {
    for (std::size_t e = 0; e < episodes; ++e) {
      const Counts c = run_one(e);
      tp += c.tp;
      fp += c.fp;
      fn += c.fn;
    }
  }
  if (failure) std::rethrow_exception(failure);
  return EvalMetrics::from_counts({tp, fp, fn});
}

}  // namespace

std::uint64_t episode_digest(const Episode& episode) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (LabelId c : episode.class_map) h = fnv1a(h, c);
  for (std::size_t s : episode.support) h = fnv1a(h, s);
  for (std::size_t s : episode.query) h = fnv1a(h, s);
  return h;
}

EpisodeTensors make_episode(const Dataset& dataset, const ClassIndex& index, const Config& config,
                            std::uint64_t seed, Stream stream, std::size_t episode_index, Episode* episode) {
  const std::uint64_t episode_seed = derive_seed(seed, stream, episode_index);
  Rng rng(episode_seed);
  Episode ep = sample_episode(dataset, index, config.n_way, config.k_shot, config.m_query, rng);
  ep.seed = episode_seed;
  EpisodeTensors t = assemble(dataset, ep, config.contrastive.cap(config.k_shot), rng);
  if (episode) *episode = std::move(ep);
  return t;
}

EncoderDims resolve_dims(const Config& config, const Dataset& data) {
  EncoderDims dims = config.dims;
  if (dims.d_in == 0) dims.d_in = data.dim;
  if (dims.d_in != data.dim) {
    throw DataError(DataError::Kind::kInvalid, "configured d_in=" + std::to_string(dims.d_in) +
                                                   " but the data has d=" + std::to_string(data.dim));
  }
  return dims;
}

TrainResult train(const Config& config, const Dataset& train_set, const Dataset* valid_set,
                  const ProgressFn& progress) {
  config.validate();
  train_set.validate();
  if (valid_set) {
    valid_set->validate();
    check_disjoint_labels({&train_set, valid_set});
  }

  TrainResult result;
  result.params = init_params(derive_seed(config.seed, Stream::kInit), resolve_dims(config, train_set));
  if (valid_set && valid_set->dim != train_set.dim) {
    throw DataError(DataError::Kind::kInvalid, "train and valid embedding dimensions differ");
  }
  if (config.train_iterations == 0) return result;

  EncoderParams params = result.params;
  AdamW optimizer({config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                   config.weight_decay});
  const ClassIndex index(train_set);
  const bool validating = valid_set != nullptr && config.val_episodes > 0;
  std::optional<double> best_f1;
  LossBreakdown last_finite;

  for (std::size_t it = 1; it <= config.train_iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    Episode episode;
    const EpisodeTensors tensors =
        make_episode(train_set, index, config, config.seed, Stream::kTrainEpisodes, it - 1, &episode);

    HybridResult step;
    try {
      step = hybrid_loss(params, tensors, config.contrastive, config.metric);
    } catch (const NumericError& e) {
      throw TrainingDiverged(it, last_finite, e.what());
    }
    if (!finite(step.loss) || !finite(step.grads)) {
      throw TrainingDiverged(it, last_finite, "non-finite loss or gradient");
    }
    last_finite = step.loss;
    optimizer.step(params, step.grads);
    if (!finite(params)) throw TrainingDiverged(it, last_finite, "non-finite parameters after update");

    IterationRecord rec;
    rec.iteration = it;
    rec.loss = step.loss;
    rec.episode_digest = episode_digest(episode);
    rec.sscl_skipped = step.sscl_skipped;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.log.iterations.push_back(rec);

    const ValidationRecord* val = nullptr;
    if (validating && (it % config.val_every == 0 || it == config.train_iterations)) {
      ValidationRecord vr{it, evaluate(params, config, *valid_set, Stream::kValidEpisodes,
                                       config.val_episodes, config.seed)};
      result.log.validations.push_back(vr);
      val = &result.log.validations.back();
      if (!best_f1 || vr.metrics.f1 > *best_f1) {
        best_f1 = vr.metrics.f1;
        result.params = params;
        result.log.best_iteration = it;
      }
    }
    if (progress) progress(rec, val);
  }
  if (!validating) {
    result.params = params;
    result.log.best_iteration = config.train_iterations;
  }
  return result;
}

Counts evaluate_episode(const EncoderParams& params, const Config& config, const EpisodeTensors& episode) {
  const Tensor support = encode(params, episode.support);
  const Tensor query = encode(params, episode.query);
  const PrototypeSet protos = compute_prototypes(support, episode.support_labels, episode.n_way);
  const ProbMatrix probs = classify(query, protos.vectors, config.metric);
  const auto predicted = config.tat_enabled ? predict_with_threshold(probs, compute_threshold(probs))
                                            : argmax_rows(probs);
  return count_predictions(episode.query_labels, predicted);
}

EvalMetrics evaluate(const EncoderParams& params, const Config& config, const Dataset& dataset,
                     Stream stream, std::size_t episodes, std::uint64_t seed) {
  return evaluate_impl(params, config, dataset, stream, episodes, seed, true);
}

EvalMetrics evaluate_serial(const EncoderParams& params, const Config& config, const Dataset& dataset,
                            Stream stream, std::size_t episodes, std::uint64_t seed) {
  return evaluate_impl(params, config, dataset, stream, episodes, seed, false);
}

EvalMetrics evaluate(const EncoderParams& params, const Config& config, const Dataset& test_set) {
  return evaluate(params, config, test_set, Stream::kTestEpisodes, config.eval_episodes, config.seed);
}

std::uint64_t run_seed(const Config& config, std::size_t run) {
  return derive_seed(config.seed, Stream::kRuns, run);
}

namespace {

struct Job {
  std::size_t variant;
  std::size_t run;
};

// Runs every (config, run) pair; runs are independent, so they spread over
// threads without changing any result.
std::vector<ExperimentResult> run_jobs(const std::vector<Config>& configs, const Dataset& train_set,
                                       const Dataset* valid_set, const Dataset& test_set) {
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < configs.size(); ++v) {
    configs[v].validate();
    for (std::size_t r = 0; r < configs[v].runs; ++r) jobs.push_back({v, r});
  }
  if (valid_set) check_disjoint_labels({&train_set, valid_set, &test_set});
  else check_disjoint_labels({&train_set, &test_set});

  std::vector<EvalMetrics> metrics(jobs.size());
  std::vector<TrainLog> logs(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long j = 0; j < static_cast<long long>(jobs.size()); ++j) {
    try {
      Config cfg = configs[jobs[j].variant];
      cfg.seed = run_seed(configs[jobs[j].variant], jobs[j].run);
      TrainResult tr = train(cfg, train_set, valid_set);
      metrics[j] = evaluate(tr.params, cfg, test_set);
      logs[j] = std::move(tr.log);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ExperimentResult> out(configs.size());
  std::vector<std::vector<EvalMetrics>> per_variant(configs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    per_variant[jobs[j].variant].push_back(metrics[j]);
    out[jobs[j].variant].logs.push_back(std::move(logs[j]));
  }
  for (std::size_t v = 0; v < configs.size(); ++v) out[v].summary = RunSummary::aggregate(per_variant[v]);
  return out;
}

}  // namespace

ExperimentResult run_experiment(const Config& config, const Dataset& train_set, const Dataset* valid_set,
                                const Dataset& test_set) {
  return std::move(run_jobs({config}, train_set, valid_set, test_set).front());
}

std::vector<Config> ablation_variants(const Config& base) {
  std::vector<Config> out(5, base);
  out[0].tat_enabled = true;
  out[1].contrastive.alpha = 0.0;
  out[2].contrastive.beta = 0.0;
  out[3].contrastive.alpha = 0.0;
  out[3].contrastive.beta = 0.0;
  out[4].tat_enabled = false;
  for (std::size_t i = 1; i < 4; ++i) out[i].tat_enabled = true;
  return out;
}

std::vector<AblationRow> ablate(const Config& base, const Dataset& train_set, const Dataset* valid_set,
                                const Dataset& test_set) {
  const auto configs = ablation_variants(base);
  auto results = run_jobs(configs, train_set, valid_set, test_set);
  std::vector<AblationRow> rows;
  for (std::size_t v = 0; v < configs.size(); ++v) {
    rows.push_back({variant_name(configs[v]), configs[v], std::move(results[v])});
  }
  return rows;
}

namespace {

std::string commented(const std::string& text) {
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    out += "# " + text.substr(start, end - start) + "\n";
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string summary_row(const std::string& variant, const RunSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", variant.c_str(), s.runs.size(),
                s.precision_mean, s.precision_std, s.recall_mean, s.recall_std, s.f1_mean, s.f1_std);
  return buf;
}

constexpr const char* kSummaryHeader = "variant,runs,P_mean,P_std,R_mean,R_std,F1_mean,F1_std\n";

}  // namespace

std::string metrics_csv(const std::string& variant, const RunSummary& summary) {
  return std::string(kSummaryHeader) + summary_row(variant, summary);
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out;
  if (!rows.empty()) out += commented(config_text(rows.front().config));
  out += kSummaryHeader;
  for (const auto& r : rows) out += summary_row(r.variant, r.result.summary);
  return out;
}

std::string train_log_jsonl(const TrainLog& log, const Config& config) {
  using nlohmann::json;
  std::string out;
  json header = {{"type", "config"},
                 {"variant", variant_name(config)},
                 {"config", config_text(config)},
                 {"best_iteration", log.best_iteration}};
  out += header.dump() + "\n";
  std::size_t v = 0;
  for (const auto& rec : log.iterations) {
    json j = {{"type", "iteration"},
              {"iteration", rec.iteration},
              {"ce", rec.loss.ce},
              {"sscl", rec.loss.sscl},
              {"pqcl", rec.loss.pqcl},
              {"total", rec.loss.total},
              {"wall_ms", rec.wall_ms},
              {"episode_digest", rec.episode_digest},
              {"sscl_skipped", rec.sscl_skipped}};
    if (v < log.validations.size() && log.validations[v].iteration == rec.iteration) {
      const auto& m = log.validations[v].metrics;
      j["validation"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn},
                         {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
      ++v;
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace fsed
