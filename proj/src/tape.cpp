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

#include "fsed/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsed/errors.hpp"
#include "fsed/kernels.hpp"

namespace fsed {
namespace {

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

std::string pair_shapes(const Tensor& a, const Tensor& b) {
  return shape_string(a.shape()) + " vs " + shape_string(b.shape());
}

void require(bool ok, Op op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op_name(op)), detail);
}

bool is_matrix(const Tensor& t) { return t.rank() == 2; }

// Stable log(sum(exp(x_j))) over the listed entries; fills softmax weights.
double logsumexp(std::span<const double> values, std::span<const std::size_t> idx,
                 double* weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j : idx) hi = std::max(hi, values[j]);
  double total = 0.0;
  for (std::size_t j : idx) total += std::exp(values[j] - hi);
  const double lse = hi + std::log(total);
  if (weights) {
    for (std::size_t t = 0; t < idx.size(); ++t) weights[t] = std::exp(values[idx[t]] - lse);
  }
  return lse;
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kAddBias: return "add_bias";
    case Op::kMatmul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kNeg: return "neg";
    case Op::kSum: return "sum";
    case Op::kRelu: return "relu";
    case Op::kL2NormalizeRows: return "l2_normalize";
    case Op::kDot: return "dot";
    case Op::kSqDist: return "sqdist";
    case Op::kPairwiseSqDist: return "pairwise_sqdist";
    case Op::kSelectRows: return "select_rows";
    case Op::kGather: return "gather";
    case Op::kLogSoftmaxRows: return "log_softmax_rows";
    case Op::kGroupLogSumExp: return "group_logsumexp";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("tape: invalid variable handle");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const { return node(v).adjoint; }

Var Tape::push(Node n) {
  const std::size_t index = nodes_.size();
  if (!n.value.all_finite()) {
    throw NumericError("tape: non-finite value produced by " + std::string(op_name(n.op)) +
                           " at node " + std::to_string(index),
                       index);
  }
  n.adjoint = Tensor(n.value.shape(), 0.0);
  nodes_.push_back(std::move(n));
  return Var{index};
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.constant = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(same_shape(x, y), Op::kAdd, pair_shapes(x, y));
  Node n{.op = Op::kAdd, .lhs = a.id, .rhs = b.id};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] += y[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(same_shape(x, y), Op::kSub, pair_shapes(x, y));
  Node n{.op = Op::kSub, .lhs = a.id, .rhs = b.id};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] -= y[i];
  return push(std::move(n));
}

Var Tape::add_bias(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& bias = value(b);
  require(is_matrix(x) && bias.rank() == 1 && bias.size() == x.cols(), Op::kAddBias,
          pair_shapes(x, bias));
  Node n{.op = Op::kAddBias, .lhs = a.id, .rhs = b.id};
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = n.value.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(is_matrix(x) && is_matrix(y) && x.cols() == y.rows(), Op::kMatmul, pair_shapes(x, y));
  Node n{.op = Op::kMatmul, .lhs = a.id, .rhs = b.id};
  n.value = Tensor({x.rows(), y.cols()}, 0.0);
  kernels::matmul_nn(x.data(), y.data(), n.value.data(), x.rows(), x.cols(), y.cols());
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Tensor& x = value(a);
  require(is_matrix(x), Op::kTranspose, shape_string(x.shape()));
  Node n{.op = Op::kTranspose, .lhs = a.id};
  n.value = Tensor({x.cols(), x.rows()}, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) n.value.at(c, r) = x.at(r, c);
  }
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(same_shape(x, y), Op::kMul, pair_shapes(x, y));
  Node n{.op = Op::kMul, .lhs = a.id, .rhs = b.id};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] *= y[i];
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n{.op = Op::kScale, .lhs = a.id, .factor = factor};
  n.value = value(a);
  for (double& v : n.value.values()) v *= factor;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n{.op = Op::kExp, .lhs = a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = std::exp(v);
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n{.op = Op::kLog, .lhs = a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = std::log(v);
  return push(std::move(n));
}

Var Tape::neg(Var a) {
  Node n{.op = Op::kNeg, .lhs = a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = -v;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n{.op = Op::kSum, .lhs = a.id};
  double total = 0.0;
  for (double v : value(a).values()) total += v;
  n.value = Tensor::scalar(total);
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n{.op = Op::kRelu, .lhs = a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Tape::l2_normalize(Var a) {
  const Tensor& x = value(a);
  require(x.rank() >= 1, Op::kL2NormalizeRows, shape_string(x.shape()));
  Node n{.op = Op::kL2NormalizeRows, .lhs = a.id};
  n.value = x;
  n.cache.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = n.value.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm < kDegenerateNorm) {
      std::fill(row.begin(), row.end(), 0.0);
      n.cache[r] = 0.0;
      degenerate_ = true;
    } else {
      for (double& v : row) v /= norm;
      n.cache[r] = norm;
    }
  }
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(x.rank() == 1 && same_shape(x, y), Op::kDot, pair_shapes(x, y));
  Node n{.op = Op::kDot, .lhs = a.id, .rhs = b.id};
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Var Tape::sqdist(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(x.rank() == 1 && same_shape(x, y), Op::kSqDist, pair_shapes(x, y));
  Node n{.op = Op::kSqDist, .lhs = a.id, .rhs = b.id};
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Var Tape::pairwise_sqdist(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require(is_matrix(x) && is_matrix(y) && x.cols() == y.cols(), Op::kPairwiseSqDist,
          pair_shapes(x, y));
  Node n{.op = Op::kPairwiseSqDist, .lhs = a.id, .rhs = b.id};
  n.value = Tensor({x.rows(), y.rows()}, 0.0);
  kernels::pairwise_sqdist(x.data(), y.data(), n.value.data(), x.rows(), y.rows(), x.cols());
  return push(std::move(n));
}

Var Tape::select_rows(Var a, std::vector<std::size_t> rows) {
  const Tensor& x = value(a);
  require(is_matrix(x), Op::kSelectRows, shape_string(x.shape()));
  for (std::size_t r : rows) {
    require(r < x.rows(), Op::kSelectRows,
            "row " + std::to_string(r) + " out of range for " + shape_string(x.shape()));
  }
  Node n{.op = Op::kSelectRows, .lhs = a.id};
  n.value = Tensor({rows.size(), x.cols()}, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.row(rows[i]).begin(), x.cols(), n.value.row(i).begin());
  }
  n.indices = std::move(rows);
  return push(std::move(n));
}

Var Tape::gather(Var a, std::vector<std::size_t> flat_indices) {
  const Tensor& x = value(a);
  Node n{.op = Op::kGather, .lhs = a.id};
  n.value = Tensor({flat_indices.size()}, 0.0);
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    require(flat_indices[i] < x.size(), Op::kGather,
            "index " + std::to_string(flat_indices[i]) + " out of range for " + shape_string(x.shape()));
    n.value[i] = x[flat_indices[i]];
  }
  n.indices = std::move(flat_indices);
  return push(std::move(n));
}

Var Tape::log_softmax_rows(Var a) {
  const Tensor& x = value(a);
  require(is_matrix(x) && x.cols() > 0, Op::kLogSoftmaxRows, shape_string(x.shape()));
  Node n{.op = Op::kLogSoftmaxRows, .lhs = a.id};
  n.value = x;
  n.cache.resize(x.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = n.value.row(r);
    // Shift by the row max before exponentiating.
    const double hi = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - hi);
    const double log_total = std::log(total);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = (row[c] - hi) - log_total;
      n.cache[r * x.cols() + c] = std::exp(row[c]);
    }
  }
  return push(std::move(n));
}

Var Tape::group_logsumexp(Var a, std::vector<std::vector<std::size_t>> groups) {
  const Tensor& x = value(a);
  Node n{.op = Op::kGroupLogSumExp, .lhs = a.id};
  n.value = Tensor({groups.size()}, 0.0);
  std::size_t total = 0;
  for (const auto& g : groups) {
    require(!g.empty(), Op::kGroupLogSumExp, "empty group");
    for (std::size_t j : g) {
      require(j < x.size(), Op::kGroupLogSumExp,
              "index " + std::to_string(j) + " out of range for " + shape_string(x.shape()));
    }
    total += g.size();
  }
  n.cache.resize(total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    n.value[i] = logsumexp(x.data(), groups[i], n.cache.data() + offset);
    offset += groups[i].size();
  }
  n.groups = std::move(groups);
  return push(std::move(n));
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw ShapeError("backward", "root must be scalar, got " + shape_string(r.value.shape()));
  }
  for (Node& n : nodes_) n.adjoint.fill(0.0);
  nodes_[root.id].adjoint[0] = 1.0;
  // Nodes are appended in evaluation order, so descending index is a valid
  // reverse topological order.
  for (std::size_t i = root.id + 1; i-- > 0;) propagate(i);
}

void Tape::propagate(std::size_t index) {
  Node& n = nodes_[index];
  const Tensor& g = n.adjoint;
  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kAdd: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
      return;
    }
    case Op::kSub: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] -= g[i];
      }
      return;
    }
    case Op::kAddBias: {
      Tensor& gx = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
      return;
    }
    case Op::kMatmul: {
      const Tensor& x = nodes_[n.lhs].value;
      const Tensor& y = nodes_[n.rhs].value;
      // dX += G Y^T ; dY += X^T G
      if (!nodes_[n.lhs].constant) {
        kernels::matmul_nt(g.data(), y.data(), nodes_[n.lhs].adjoint.data(), x.rows(), y.cols(), x.cols());
      }
      if (!nodes_[n.rhs].constant) {
        kernels::matmul_tn(x.data(), g.data(), nodes_[n.rhs].adjoint.data(), x.cols(), x.rows(), y.cols());
      }
      return;
    }
    case Op::kTranspose: {
      Tensor& gx = nodes_[n.lhs].adjoint;
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gx.at(c, r) += g.at(r, c);
      }
      return;
    }
    case Op::kMul: {
      const Tensor& x = nodes_[n.lhs].value;
      const Tensor& y = nodes_[n.rhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * y[i];
        gb[i] += g[i] * x[i];
      }
      return;
    }
    case Op::kScale: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.factor;
      return;
    }
    case Op::kExp: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      return;
    }
    case Op::kLog: {
      const Tensor& x = nodes_[n.lhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
      return;
    }
    case Op::kNeg: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
      return;
    }
    case Op::kSum: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (double& v : ga.values()) v += g[0];
      return;
    }
    case Op::kRelu: {
      const Tensor& x = nodes_[n.lhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) ga[i] += g[i];
      }
      return;
    }
    case Op::kL2NormalizeRows: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      const std::size_t cols = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        const double norm = n.cache[r];
        if (norm == 0.0) continue;
        auto y = n.value.row(r);
        auto gy = g.row(r);
        double proj = 0.0;
        for (std::size_t c = 0; c < cols; ++c) proj += y[c] * gy[c];
        auto gx = ga.row(r);
        for (std::size_t c = 0; c < cols; ++c) gx[c] += (gy[c] - y[c] * proj) / norm;
      }
      return;
    }
    case Op::kDot: {
      const Tensor& x = nodes_[n.lhs].value;
      const Tensor& y = nodes_[n.rhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < x.size(); ++i) {
        ga[i] += g[0] * y[i];
        gb[i] += g[0] * x[i];
      }
      return;
    }
    case Op::kSqDist: {
      const Tensor& x = nodes_[n.lhs].value;
      const Tensor& y = nodes_[n.rhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = 2.0 * g[0] * (x[i] - y[i]);
        ga[i] += d;
        gb[i] -= d;
      }
      return;
    }
    case Op::kPairwiseSqDist: {
      const Tensor& x = nodes_[n.lhs].value;
      const Tensor& y = nodes_[n.rhs].value;
      Tensor& ga = nodes_[n.lhs].adjoint;
      Tensor& gb = nodes_[n.rhs].adjoint;
      const std::size_t dim = x.cols();
      for (std::size_t i = 0; i < x.rows(); ++i) {
        auto xi = x.row(i);
        auto gxi = ga.row(i);
        for (std::size_t j = 0; j < y.rows(); ++j) {
          const double w = 2.0 * g.at(i, j);
          if (w == 0.0) continue;
          auto yj = y.row(j);
          auto gyj = gb.row(j);
          for (std::size_t c = 0; c < dim; ++c) {
            const double d = w * (xi[c] - yj[c]);
            gxi[c] += d;
            gyj[c] -= d;
          }
        }
      }
      return;
    }
    case Op::kSelectRows: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        auto src = g.row(i);
        auto dst = ga.row(n.indices[i]);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
      return;
    }
    case Op::kGather: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      for (std::size_t i = 0; i < n.indices.size(); ++i) ga[n.indices[i]] += g[i];
      return;
    }
    case Op::kLogSoftmaxRows: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      const std::size_t cols = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        auto gy = g.row(r);
        double total = 0.0;
        for (double v : gy) total += v;
        auto gx = ga.row(r);
        for (std::size_t c = 0; c < cols; ++c) gx[c] += gy[c] - n.cache[r * cols + c] * total;
      }
      return;
    }
    case Op::kGroupLogSumExp: {
      Tensor& ga = nodes_[n.lhs].adjoint;
      std::size_t offset = 0;
      for (std::size_t i = 0; i < n.groups.size(); ++i) {
        const auto& grp = n.groups[i];
        for (std::size_t t = 0; t < grp.size(); ++t) ga[grp[t]] += g[i] * n.cache[offset + t];
        offset += grp.size();
      }
      return;
    }
  }
}

}  // namespace fsed
