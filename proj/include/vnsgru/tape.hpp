// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vnsgru/tensor.hpp"

namespace vnsgru {

/// Handle into a Tape. Cheap to copy; only meaningful for the tape that
/// issued it.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Forward calls append one node per op and evaluate
/// immediately; gradients() replays the recorded closures newest-first and
/// accumulates vector-Jacobian products. One tape per training step; build,
/// differentiate, discard.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameters) or constant (anything whose gradient
  /// is never requested); the tape treats both identically.
  Var leaf(Tensor value);

  Var matmul(Var a, Var b);
  Var matvec_t(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var log(Var a);
  /// Scalar out = x[index].
  Var pick(Var x, std::size_t index);
  /// Row slice of a matrix; the embedding lookup. Gradient scatters back
  /// into the picked row only.
  Var row(Var m, std::size_t r);
  Var sum(Var a);
  Var mean(Var a);
  Var scale(Var a, double c);
  Var affine(Var a, double m, double c);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Backpropagates from a scalar loss. Returns gradients aligned with
  /// `wrt`; a leaf the loss does not depend on gets a zero tensor.
  std::vector<Tensor> gradients(Var loss, const std::vector<Var>& wrt);

private:
  struct Node {
    Tensor value;
    std::function<void(Tape&, const Tensor&)> backward;
  };

  Var push(Tensor value, std::function<void(Tape&, const Tensor&)> backward);
  void accum(std::int32_t id, const Tensor& g);
  void check(Var v, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

} // namespace vnsgru
