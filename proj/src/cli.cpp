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

#include "fsed/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsed/config.hpp"
#include "fsed/dataset.hpp"
#include "fsed/encoder.hpp"
#include "fsed/errors.hpp"
#include "fsed/protonet.hpp"
#include "fsed/sampler.hpp"
#include "fsed/trainer.hpp"
#include "fsed/verify.hpp"

namespace fsed::cli {
namespace {

namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << text;
}

std::string commented(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

// Flags shared by train / eval / ablate. Each maps onto a config key and is
// applied after the config file.
struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  bool no_tat = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Key-value config file");
    add(app, "--seed", "seed", "Global seed");
    add(app, "--n", "n_way", "Event types per episode (N)");
    add(app, "--k", "k_shot", "Support sentences per type (K)");
    add(app, "--m", "m_query", "Query sentences per type (M)");
    add(app, "--alpha", "alpha", "SSCL weight");
    add(app, "--beta", "beta", "PQCL weight");
    add(app, "--tau-sscl", "tau_sscl", "SSCL temperature");
    add(app, "--tau-pqcl", "tau_pqcl", "PQCL temperature");
    add(app, "--metric", "metric", "euclid, dot or cosine");
    add(app, "--iterations", "train_iterations", "Training iterations");
    add(app, "--runs", "runs", "Repeated runs");
    add(app, "--episodes", "eval_episodes", "Test episodes per run");
    add(app, "--val-episodes", "val_episodes", "Validation episodes");
    add(app, "--train", "train_path", "Training split (EMB1)");
    add(app, "--valid", "valid_path", "Validation split (EMB1)");
    add(app, "--test", "test_path", "Test split (EMB1)");
    add(app, "--out", "out_dir", "Output directory");
    app->add_flag("--no-tat", no_tat, "Disable the task-adaptive threshold");
  }

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }

  CliConfig resolve() const {
    CliConfig cfg;
    if (!config_path.empty()) apply_config_text(read_text(config_path), cfg);
    for (const auto& [key, value] : overrides) apply_config_value(key, value, cfg);
    if (no_tat) cfg.config.tat_enabled = false;
    cfg.config.validate();
    return cfg;
  }
};

Dataset load_split(const std::string& path, Split split, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what + " dataset path");
  return load_emb1(path, split);
}

void print_header(std::ostream& out, const std::string& command, const CliConfig& cfg) {
  out << "# fsed " << command << " variant=" << variant_name(cfg.config) << "\n" << commented(config_text(cfg));
}

void print_metrics(std::ostream& out, const std::string& label, const EvalMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s tp=%llu fp=%llu fn=%llu P=%.4f R=%.4f F1=%.4f\n", label.c_str(),
                static_cast<unsigned long long>(m.counts.tp), static_cast<unsigned long long>(m.counts.fp),
                static_cast<unsigned long long>(m.counts.fn), m.precision, m.recall, m.f1);
  out << buf;
}

void print_summary(std::ostream& out, const std::string& variant, const RunSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-15s P=%.2f±%.2f R=%.2f±%.2f F1=%.2f±%.2f\n", variant.c_str(),
                100 * s.precision_mean, 100 * s.precision_std, 100 * s.recall_mean, 100 * s.recall_std,
                100 * s.f1_mean, 100 * s.f1_std);
  out << buf;
}

int cmd_train(const RunFlags& flags, std::ostream& out) {
  const CliConfig cfg = flags.resolve();
  print_header(out, "train", cfg);
  const Dataset train_set = load_split(cfg.train_path, Split::kTrain, "train");
  std::optional<Dataset> valid;
  if (!cfg.valid_path.empty()) valid = load_split(cfg.valid_path, Split::kValid, "valid");

  const auto progress = [&](const IterationRecord& r, const ValidationRecord* v) {
    if (v) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "iter %zu loss=%.4f (ce=%.4f sscl=%.4f pqcl=%.4f) ", r.iteration,
                    r.loss.total, r.loss.ce, r.loss.sscl, r.loss.pqcl);
      print_metrics(out, buf + std::string("valid"), v->metrics);
    }
  };
  const TrainResult result = train(cfg.config, train_set, valid ? &*valid : nullptr, progress);

  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  save_checkpoint(result.params, config_text(cfg), dir / "checkpoint.psc1");
  write_text(dir / "train_log.jsonl", train_log_jsonl(result.log, cfg.config));
  write_text(dir / "effective_config.txt", config_text(cfg));
  out << "best_iteration=" << result.log.best_iteration << "\n"
      << "wrote " << (dir / "checkpoint.psc1").string() << "\n";
  return kOk;
}

int cmd_eval(const RunFlags& flags, const std::string& checkpoint, std::ostream& out) {
  const CliConfig cfg = flags.resolve();
  print_header(out, "eval", cfg);
  const Dataset test_set = load_split(cfg.test_path, Split::kTest, "test");
  if (checkpoint.empty()) throw UsageError("eval needs --checkpoint");
  const EncoderParams params = load_checkpoint(checkpoint);
  if (params.dims.d_in != test_set.dim) {
    throw DataError(DataError::Kind::kInvalid, "checkpoint expects d=" + std::to_string(params.dims.d_in) +
                                                   ", test data has d=" + std::to_string(test_set.dim));
  }
  std::vector<EvalMetrics> runs;
  for (std::size_t r = 0; r < cfg.config.runs; ++r) {
    Config c = cfg.config;
    c.seed = run_seed(cfg.config, r);
    runs.push_back(evaluate(params, c, test_set));
    print_metrics(out, "run " + std::to_string(r), runs.back());
  }
  const RunSummary summary = RunSummary::aggregate(std::move(runs));
  print_summary(out, variant_name(cfg.config), summary);
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "metrics.csv",
             commented(config_text(cfg)) + metrics_csv(variant_name(cfg.config), summary));
  return kOk;
}

int cmd_ablate(const RunFlags& flags, std::ostream& out) {
  const CliConfig cfg = flags.resolve();
  print_header(out, "ablate", cfg);
  const Dataset train_set = load_split(cfg.train_path, Split::kTrain, "train");
  const Dataset test_set = load_split(cfg.test_path, Split::kTest, "test");
  std::optional<Dataset> valid;
  if (!cfg.valid_path.empty()) valid = load_split(cfg.valid_path, Split::kValid, "valid");
  const auto rows = ablate(cfg.config, train_set, valid ? &*valid : nullptr, test_set);
  for (const auto& r : rows) print_summary(out, r.variant, r.result.summary);
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "ablation.csv", ablation_csv(rows));
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances, const std::string& out_dir, std::ostream& out) {
  out << "# fsed gradcheck seed=" << seed << " instances=" << instances << "\n";
  bool ok = true;
  for (const auto& r : run_gradcheck_suite(seed, instances)) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-4s %-58s max=%.3e tol=%.0e n=%zu\n", r.passed() ? "ok" : "FAIL",
                  r.name.c_str(), r.max_error, r.tolerance, r.instances);
    out << buf;
    ok = ok && r.passed();
  }
  if (!out_dir.empty()) {
    std::vector<double> seps;
    for (int i = 20; i >= 0; --i) seps.push_back(i / 20.0);
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "bottleneck.csv", bottleneck_csv(bottleneck_probe(seps, seed)));
  }
  return ok ? kOk : kNumericFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot event detection with hybrid contrastive learning and a task-adaptive threshold"};
  app.require_subcommand(1);

  RunFlags train_flags, eval_flags, ablate_flags;
  auto* train_cmd = app.add_subcommand("train", "Episodic training; writes checkpoint and JSONL log");
  train_flags.attach(train_cmd);

  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on test episodes");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "PSC1 checkpoint")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and test the five ablation variants");
  ablate_flags.attach(ablate_cmd);

  std::uint64_t gc_seed = 7;
  std::size_t gc_instances = 30;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Verify analytic and autodiff gradients");
  gc_cmd->add_option("--seed", gc_seed, "Seed");
  gc_cmd->add_option("--instances", gc_instances, "Random instances per check");
  gc_cmd->add_option("--out", gc_out, "Directory for bottleneck.csv");

  SynthSpec spec;
  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 1;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic EMB1 dataset");
  synth_cmd->add_option("--spec", spec_path, "Key-value synth spec file");
  synth_cmd->add_option("--classes", spec.class_count);
  synth_cmd->add_option("--sentences", spec.sentences_per_class, "Sentences per class");
  synth_cmd->add_option("--length", spec.sentence_length, "Tokens per sentence");
  synth_cmd->add_option("--dim", spec.d_in);
  synth_cmd->add_option("--separation", spec.cluster_separation);
  synth_cmd->add_option("--o-noise", spec.o_noise_scale);
  synth_cmd->add_option("--trigger-noise", spec.trigger_noise_scale);
  synth_cmd->add_option("--overlap", spec.overlap_fraction);
  synth_cmd->add_option("--first-class", spec.first_class);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out, "Output EMB1 path")->required();

  std::string stats_path;
  auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics");
  stats_cmd->add_option("path", stats_path, "EMB1 file")->required();

  auto* defaults_cmd = app.add_subcommand("defaults", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, checkpoint, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_instances, gc_out, out);
    if (synth_cmd->parsed()) {
      if (!spec_path.empty()) {
        // Spec file first, then any explicit flags on top.
        SynthSpec from_file;
        std::istringstream in(read_text(spec_path));
        std::string line;
        while (std::getline(in, line)) {
          if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
          const auto eq = line.find('=');
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          if (eq == std::string::npos) throw UsageError("synth spec: expected key = value");
          auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
          };
          const std::string key = trim(line.substr(0, eq));
          const std::string value = trim(line.substr(eq + 1));
          std::size_t used = 0;
          auto num = [&] {
            const double v = std::stod(value, &used);
            if (used != value.size()) throw UsageError("synth spec: bad value for " + key);
            return v;
          };
          if (key == "class_count") from_file.class_count = static_cast<std::size_t>(num());
          else if (key == "sentences_per_class") from_file.sentences_per_class = static_cast<std::size_t>(num());
          else if (key == "sentence_length") from_file.sentence_length = static_cast<std::size_t>(num());
          else if (key == "d_in") from_file.d_in = static_cast<std::size_t>(num());
          else if (key == "cluster_separation") from_file.cluster_separation = num();
          else if (key == "o_noise_scale") from_file.o_noise_scale = num();
          else if (key == "trigger_noise_scale") from_file.trigger_noise_scale = num();
          else if (key == "overlap_fraction") from_file.overlap_fraction = num();
          else if (key == "first_class") from_file.first_class = static_cast<std::size_t>(num());
          else if (key == "seed") synth_seed = static_cast<std::uint64_t>(num());
          else throw UsageError("synth spec: unknown key \"" + key + "\"");
        }
        for (const auto* opt : synth_cmd->get_options()) {
          if (opt->count() == 0) continue;
          const std::string name = opt->get_name();
          if (name == "--classes") from_file.class_count = spec.class_count;
          if (name == "--sentences") from_file.sentences_per_class = spec.sentences_per_class;
          if (name == "--length") from_file.sentence_length = spec.sentence_length;
          if (name == "--dim") from_file.d_in = spec.d_in;
          if (name == "--separation") from_file.cluster_separation = spec.cluster_separation;
          if (name == "--o-noise") from_file.o_noise_scale = spec.o_noise_scale;
          if (name == "--trigger-noise") from_file.trigger_noise_scale = spec.trigger_noise_scale;
          if (name == "--overlap") from_file.overlap_fraction = spec.overlap_fraction;
          if (name == "--first-class") from_file.first_class = spec.first_class;
        }
        spec = from_file;
      }
      const Dataset ds = synth_dataset(spec, synth_seed);
      write_emb1(ds, synth_out);
      out << "wrote " << synth_out << " " << format_stats(dataset_stats(ds)) << "\n";
      return kOk;
    }
    if (stats_cmd->parsed()) {
      out << format_stats(dataset_stats(load_emb1(stats_path))) << "\n";
      return kOk;
    }
    if (defaults_cmd->parsed()) {
      out << config_text(CliConfig{});
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace fsed::cli
