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

#include <cstddef>
#include <string_view>
#include <vector>

#include "fsed/tensor.hpp"

namespace fsed {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class Op {
  kLeaf,
  kAdd,
  kSub,
  kAddBias,
  kMatmul,
  kTranspose,
  kMul,
  kScale,
  kExp,
  kLog,
  kNeg,
  kSum,
  kRelu,
  kL2NormalizeRows,
  kDot,
  kSqDist,
  kPairwiseSqDist,
  kSelectRows,
  kGather,
  kLogSoftmaxRows,
  kGroupLogSumExp,
};

std::string_view op_name(Op op);

/// Reverse-mode tape. Primitives evaluate eagerly (the forward pass) and
/// record themselves; backward() replays the record in reverse.
///
/// Every primitive validates shapes (ShapeError naming the primitive) and
/// checks its output for NaN/Inf (NumericError carrying the node index).
/// A tape is single-threaded; separate tapes share nothing.
class Tape {
 public:
  /// Norm below which l2 normalization yields the zero vector.
  static constexpr double kDegenerateNorm = 1e-9;

  Var leaf(Tensor value);
  /// Leaf whose adjoint is never needed; matmul skips propagating into it.
  Var constant(Tensor value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// x (n x m) plus bias (m) on every row.
  Var add_bias(Var x, Var bias);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var exp(Var a);
  Var log(Var a);
  Var neg(Var a);
  Var sum(Var a);
  Var relu(Var a);
  /// Row-wise for matrices, whole-vector for rank 1.
  Var l2_normalize(Var a);
  Var dot(Var a, Var b);
  Var sqdist(Var a, Var b);
  /// (n x d), (m x d) -> (n x m) squared euclidean distances.
  Var pairwise_sqdist(Var a, Var b);
  Var select_rows(Var a, std::vector<std::size_t> rows);
  /// Flat-index gather into a vector.
  Var gather(Var a, std::vector<std::size_t> flat_indices);
  Var log_softmax_rows(Var a);
  /// One log-sum-exp per group of flat indices into a; returns a vector.
  Var group_logsumexp(Var a, std::vector<std::vector<std::size_t>> groups);

  const Tensor& value(Var v) const;
  /// Adjoint after backward(); zero for nodes off every path to the root.
  const Tensor& grad(Var v) const;

  /// Resets all adjoints, seeds the scalar root with 1 and propagates.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// True when some l2 normalization met a row with norm below kDegenerateNorm.
  bool degenerate() const noexcept { return degenerate_; }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double factor = 0.0;
    bool constant = false;
    Tensor value;
    Tensor adjoint;
    std::vector<double> cache;  // norms / softmax weights, op-specific
    std::vector<std::size_t> indices;
    std::vector<std::vector<std::size_t>> groups;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  void propagate(std::size_t index);

  std::vector<Node> nodes_;
  bool degenerate_ = false;
};

}  // namespace fsed
