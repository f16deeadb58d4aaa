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
#include <map>
#include <string>

#include "fsed/contrastive.hpp"
#include "fsed/encoder.hpp"
#include "fsed/protonet.hpp"

namespace fsed {

/// Every knob of a training/evaluation run. Defaults are scaled down from
/// a BERT fine-tuning setup to a desk-sized MLP trunk; the BERT-scale value
/// is noted where it differs.
struct Config {
  std::size_t n_way = 5;
  std::size_t k_shot = 5;
  std::size_t m_query = 2;
  EncoderDims dims;  // d_in is taken from the data when 0
  Metric metric = Metric::kSquaredEuclidean;
  ContrastiveConfig contrastive;
  bool tat_enabled = true;

  double learning_rate = 1e-3;  // BERT-scale: 1e-5
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;

  std::size_t train_iterations = 2000;  // BERT-scale: 20000
  std::size_t val_every = 100;
  std::size_t val_episodes = 100;   // BERT-scale: 1000
  std::size_t eval_episodes = 200;  // BERT-scale: 3000
  std::size_t runs = 5;
  std::uint64_t seed = 42;

  /// Throws UsageError on any out-of-range field.
  void validate() const;
};

/// Config plus the file-system side of a CLI invocation.
struct CliConfig {
  Config config;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string out_dir = ".";
};

/// "key = value" lines, '#' comments. Unknown keys and malformed values
/// throw UsageError naming the line.
void apply_config_text(const std::string& text, CliConfig& cfg);
void apply_config_value(const std::string& key, const std::string& value, CliConfig& cfg);
/// Canonical text of every key, parseable by apply_config_text.
std::string config_text(const CliConfig& cfg);
std::string config_text(const Config& cfg);

/// Ablation name for the toggles: hcl-tat, w/o-sscl, w/o-pqcl, w/o-hcl,
/// w/o-tat, proto-baseline (no HCL and no TAT), or custom.
std::string variant_name(const Config& cfg);

}  // namespace fsed
