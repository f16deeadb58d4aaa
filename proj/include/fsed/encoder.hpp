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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>
#include <string>

#include "fsed/tape.hpp"
#include "fsed/tensor.hpp"

namespace fsed {

struct EncoderDims {
  std::size_t d_in = 0;
  std::size_t d_h = 64;
  std::size_t d_rep = 32;
  std::size_t d_proj_hidden = 32;
  std::size_t d_proj = 32;

  bool operator==(const EncoderDims&) const = default;
};

/// Trunk nonlinearity. kIdentity exists for linear test configurations.
enum class Activation : std::uint32_t { kRelu = 0, kIdentity = 1 };

/// Trunk: h = W2 relu(W1 x + b1) + b2. Head: h~ = normalize(V2 relu(V1 h)).
/// Row-vector convention: weights are (fan_in x fan_out).
struct EncoderParams {
  EncoderDims dims;
  Activation activation = Activation::kRelu;
  Tensor w1, b1, w2, b2;  // trunk
  Tensor v1, v2;          // projection head, no bias

  static constexpr std::size_t kBlocks = 6;
  std::array<Tensor*, kBlocks> blocks() { return {&w1, &b1, &w2, &b2, &v1, &v2}; }
  std::array<const Tensor*, kBlocks> blocks() const { return {&w1, &b1, &w2, &b2, &v1, &v2}; }
  std::size_t parameter_count() const;

  bool operator==(const EncoderParams&) const = default;
};

/// All blocks concatenated in blocks() order, and the inverse.
std::vector<double> flatten(const EncoderParams& params);
void assign(EncoderParams& params, std::span<const double> flat);

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero biases.
EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims);

/// Parameters bound as tape leaves.
struct EncoderVars {
  Var w1, b1, w2, b2, v1, v2;
  Activation activation = Activation::kRelu;
  std::array<Var, EncoderParams::kBlocks> blocks() const { return {w1, b1, w2, b2, v1, v2}; }
};

EncoderVars bind(Tape& tape, const EncoderParams& params);

/// Token representations for an (n x d_in) input.
Var encode(Tape& tape, const EncoderVars& vars, Var input);
/// l2-normalized projections of (n x d_rep) representations.
Var project(Tape& tape, const EncoderVars& vars, Var reps);

Tensor encode(const EncoderParams& params, const Tensor& input);
/// `degenerate`, when given, is set if any row had (near) zero norm.
Tensor project(const EncoderParams& params, const Tensor& reps, bool* degenerate = nullptr);

/// PSC1 checkpoint: magic, version, activation, dims, float64 blocks in
/// blocks() order, then the effective configuration text.
void save_checkpoint(const EncoderParams& params, const std::string& config_text,
                     const std::filesystem::path& path);
EncoderParams load_checkpoint(const std::filesystem::path& path, std::string* config_text = nullptr);

}  // namespace fsed
