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

#include "fsed/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

#include "fsed/errors.hpp"

namespace fsed {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError("config: " + key + " expects a non-negative integer, got \"" + v + "\"");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError("config: " + key + " expects a number, got \"" + v + "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config: " + key + " expects true or false, got \"" + v + "\"");
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  const char* key;
  std::function<void(CliConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const CliConfig&)> get;
};

#define FSED_UINT(name, member)                                                                          \
  Field {                                                                                                \
    name, [](CliConfig& c, const std::string& k, const std::string& v) { c.member = parse_uint(k, v); }, \
        [](const CliConfig& c) { return std::to_string(c.member); }                                      \
  }
#define FSED_DOUBLE(name, member)                                                                          \
  Field {                                                                                                  \
    name, [](CliConfig& c, const std::string& k, const std::string& v) { c.member = parse_double(k, v); }, \
        [](const CliConfig& c) { return fmt(c.member); }                                                   \
  }
#define FSED_STRING(name, member)                                                              \
  Field {                                                                                      \
    name, [](CliConfig& c, const std::string&, const std::string& v) { c.member = v; },        \
        [](const CliConfig& c) { return c.member; }                                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FSED_UINT("n_way", config.n_way),
      FSED_UINT("k_shot", config.k_shot),
      FSED_UINT("m_query", config.m_query),
      FSED_UINT("d_in", config.dims.d_in),
      FSED_UINT("d_h", config.dims.d_h),
      FSED_UINT("d_rep", config.dims.d_rep),
      FSED_UINT("d_proj_hidden", config.dims.d_proj_hidden),
      FSED_UINT("d_proj", config.dims.d_proj),
      Field{"metric", [](CliConfig& c, const std::string&, const std::string& v) { c.config.metric = parse_metric(v); },
            [](const CliConfig& c) { return metric_name(c.config.metric); }},
      FSED_DOUBLE("tau_sscl", config.contrastive.tau_sscl),
      FSED_DOUBLE("tau_pqcl", config.contrastive.tau_pqcl),
      FSED_DOUBLE("alpha", config.contrastive.alpha),
      FSED_DOUBLE("beta", config.contrastive.beta),
      Field{"o_subsample_cap",
            [](CliConfig& c, const std::string& k, const std::string& v) {
              if (v == "auto") {
                c.config.contrastive.o_subsample_cap.reset();
              } else {
                c.config.contrastive.o_subsample_cap = parse_uint(k, v);
              }
            },
            [](const CliConfig& c) {
              const auto& cap = c.config.contrastive.o_subsample_cap;
              return cap ? std::to_string(*cap) : std::string("auto");
            }},
      Field{"tat_enabled",
            [](CliConfig& c, const std::string& k, const std::string& v) { c.config.tat_enabled = parse_bool(k, v); },
            [](const CliConfig& c) { return std::string(c.config.tat_enabled ? "true" : "false"); }},
      FSED_DOUBLE("learning_rate", config.learning_rate),
      FSED_DOUBLE("adam_beta1", config.adam_beta1),
      FSED_DOUBLE("adam_beta2", config.adam_beta2),
      FSED_DOUBLE("adam_eps", config.adam_eps),
      FSED_DOUBLE("weight_decay", config.weight_decay),
      FSED_UINT("train_iterations", config.train_iterations),
      FSED_UINT("val_every", config.val_every),
      FSED_UINT("val_episodes", config.val_episodes),
      FSED_UINT("eval_episodes", config.eval_episodes),
      FSED_UINT("runs", config.runs),
      FSED_UINT("seed", config.seed),
      FSED_STRING("train_path", train_path),
      FSED_STRING("valid_path", valid_path),
      FSED_STRING("test_path", test_path),
      FSED_STRING("out_dir", out_dir),
  };
  return table;
}

#undef FSED_UINT
#undef FSED_DOUBLE
#undef FSED_STRING

constexpr std::size_t kPathFields = 4;

}  // namespace

void Config::validate() const {
  if (n_way == 0 || k_shot == 0 || m_query == 0) throw UsageError("n_way, k_shot and m_query must be positive");
  if (dims.d_h == 0 || dims.d_rep == 0 || dims.d_proj_hidden == 0 || dims.d_proj == 0) {
    throw UsageError("encoder dimensions must be positive");
  }
  contrastive.validate();
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw UsageError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0) || !(weight_decay >= 0.0)) throw UsageError("adam_eps must be positive, weight_decay >= 0");
  if (val_every == 0 || runs == 0 || eval_episodes == 0) {
    throw UsageError("val_every, runs and eval_episodes must be positive");
  }
}

void apply_config_value(const std::string& key, const std::string& value, CliConfig& cfg) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw UsageError("config: unknown key \"" + key + "\"");
}

void apply_config_text(const std::string& text, CliConfig& cfg) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_config_value(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), cfg);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string config_text(const CliConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_text(const Config& cfg) {
  CliConfig wrapper;
  wrapper.config = cfg;
  std::string out;
  const auto& table = fields();
  for (std::size_t i = 0; i + kPathFields < table.size(); ++i) {
    out += std::string(table[i].key) + " = " + table[i].get(wrapper) + "\n";
  }
  return out;
}

std::string variant_name(const Config& cfg) {
  const bool sscl = cfg.contrastive.alpha > 0.0;
  const bool pqcl = cfg.contrastive.beta > 0.0;
  const bool tat = cfg.tat_enabled;
  if (sscl && pqcl && tat) return "hcl-tat";
  if (!sscl && pqcl && tat) return "w/o-sscl";
  if (sscl && !pqcl && tat) return "w/o-pqcl";
  if (!sscl && !pqcl && tat) return "w/o-hcl";
  if (sscl && pqcl && !tat) return "w/o-tat";
  if (!sscl && !pqcl && !tat) return "proto-baseline";
  return "custom";
}

}  // namespace fsed
