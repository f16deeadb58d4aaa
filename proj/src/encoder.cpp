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

#include "fsed/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fsed/binary_io.hpp"
#include "fsed/errors.hpp"
#include "fsed/rng.hpp"

namespace fsed {
namespace {

constexpr char kMagic[4] = {'P', 'S', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t({fan_in, fan_out});
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void check_dims(const EncoderDims& d) {
  if (d.d_in == 0 || d.d_h == 0 || d.d_rep == 0 || d.d_proj_hidden == 0 || d.d_proj == 0) {
    throw UsageError("encoder dimensions must be positive");
  }
}

}  // namespace

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : blocks()) n += t->size();
  return n;
}

std::vector<double> flatten(const EncoderParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const Tensor* t : params.blocks()) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

void assign(EncoderParams& params, std::span<const double> flat) {
  if (flat.size() != params.parameter_count()) {
    throw ShapeError("assign", std::to_string(flat.size()) + " values for " +
                                   std::to_string(params.parameter_count()) + " parameters");
  }
  std::size_t offset = 0;
  for (Tensor* t : params.blocks()) {
    std::copy_n(flat.begin() + static_cast<long>(offset), t->size(), t->values().begin());
    offset += t->size();
  }
}

EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims) {
  check_dims(dims);
  Rng rng(seed);
  EncoderParams p;
  p.dims = dims;
  p.w1 = glorot(rng, dims.d_in, dims.d_h);
  p.b1 = Tensor({dims.d_h}, 0.0);
  p.w2 = glorot(rng, dims.d_h, dims.d_rep);
  p.b2 = Tensor({dims.d_rep}, 0.0);
  p.v1 = glorot(rng, dims.d_rep, dims.d_proj_hidden);
  p.v2 = glorot(rng, dims.d_proj_hidden, dims.d_proj);
  return p;
}

EncoderVars bind(Tape& tape, const EncoderParams& params) {
  EncoderVars v;
  v.w1 = tape.leaf(params.w1);
  v.b1 = tape.leaf(params.b1);
  v.w2 = tape.leaf(params.w2);
  v.b2 = tape.leaf(params.b2);
  v.v1 = tape.leaf(params.v1);
  v.v2 = tape.leaf(params.v2);
  v.activation = params.activation;
  return v;
}

Var encode(Tape& tape, const EncoderVars& vars, Var input) {
  Var hidden = tape.add_bias(tape.matmul(input, vars.w1), vars.b1);
  if (vars.activation == Activation::kRelu) hidden = tape.relu(hidden);
  return tape.add_bias(tape.matmul(hidden, vars.w2), vars.b2);
}

Var project(Tape& tape, const EncoderVars& vars, Var reps) {
  Var hidden = tape.relu(tape.matmul(reps, vars.v1));
  return tape.l2_normalize(tape.matmul(hidden, vars.v2));
}

Tensor encode(const EncoderParams& params, const Tensor& input) {
  Tape tape;
  const auto vars = bind(tape, params);
  return tape.value(encode(tape, vars, tape.constant(input)));
}

Tensor project(const EncoderParams& params, const Tensor& reps, bool* degenerate) {
  Tape tape;
  const auto vars = bind(tape, params);
  Tensor out = tape.value(project(tape, vars, tape.leaf(reps)));
  if (degenerate) *degenerate = tape.degenerate();
  return out;
}

void save_checkpoint(const EncoderParams& params, const std::string& config_text,
                     const std::filesystem::path& path) {
  io::Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.activation));
  const auto& d = params.dims;
  for (std::size_t v : {d.d_in, d.d_h, d.d_rep, d.d_proj_hidden, d.d_proj}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  for (const Tensor* t : params.blocks()) {
    for (double v : t->values()) w.put<double>(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_text.size()));
  w.put_bytes(config_text);
  io::write_file(path.string(), w.bytes());
}

EncoderParams load_checkpoint(const std::filesystem::path& path, std::string* config_text) {
  const auto bytes = io::read_file(path.string());
  io::Reader r(bytes);
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != std::string(kMagic, 4)) {
    throw DataError(DataError::Kind::kBadMagic, path.string() + ": bad magic, expected \"PSC1\"", 0);
  }
  r.get_bytes(4, "magic");
  if (r.get<std::uint32_t>("version") != kVersion) {
    throw DataError(DataError::Kind::kBadVersion, path.string() + ": unsupported PSC1 version", 4);
  }
  const auto activation = r.get<std::uint32_t>("activation");
  if (activation > 1) throw DataError(DataError::Kind::kInvalid, "unknown activation", 8);
  EncoderDims dims;
  dims.d_in = r.get<std::uint32_t>("d_in");
  dims.d_h = r.get<std::uint32_t>("d_h");
  dims.d_rep = r.get<std::uint32_t>("d_rep");
  dims.d_proj_hidden = r.get<std::uint32_t>("d_proj_hidden");
  dims.d_proj = r.get<std::uint32_t>("d_proj");
  EncoderParams p = init_params(0, dims);
  p.activation = static_cast<Activation>(activation);
  for (Tensor* t : p.blocks()) {
    for (double& v : t->values()) {
      const std::uint64_t at = r.offset();
      v = r.get<double>("weight block");
      if (!std::isfinite(v)) throw DataError(DataError::Kind::kNonFinite, "non-finite weight", at);
    }
  }
  const auto len = r.get<std::uint32_t>("config length");
  std::string text = r.get_bytes(len, "config text");
  if (config_text) *config_text = std::move(text);
  return p;
}

}  // namespace fsed
