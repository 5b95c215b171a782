#pragma once

// Tape-based reverse-mode differentiation over the small operation set the
// graph model needs. One Tape per document forward pass; tapes are not
// shared between threads.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "stack_order/tensor.hpp"

namespace stack_order {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

using IndexPair = std::pair<std::size_t, std::size_t>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Differentiable input; its gradient is available after backward().
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a rank-0 loss. Resets all gradients first, so it
  /// may be called again after recording more operations.
  void backward(Var loss);

  // x:[m,k] (or [k]) times w:[n,k] transposed -> [m,n] (or [n]).
  Var matmul_nt(Var x, Var w);
  // m:[p,d] times v:[d] -> [p]
  Var matvec(Var m, Var v);
  Var dot(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var relu(Var x);
  Var sin(Var x);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(Var a, Var b);
  Var slice_rows(Var x, std::size_t begin, std::size_t end);
  // Row i of the result is the mean of the rows of x listed in sources[i];
  // an empty list yields a zero row.
  Var neighbor_mean(Var x, std::span<const std::vector<std::size_t>> sources);
  // Row p of the result is x[first] - x[second] for pairs[p].
  Var pair_difference(Var x, std::span<const IndexPair> pairs);
  // Elementwise first component of softmax(f, -f), i.e. logistic(2f).
  Var pair_softmax(Var scores);
  // mean of -log(clamp(p, eps, 1 - eps)) over all elements.
  Var bce_mean(Var probabilities, double eps = 1e-7);
  Var mean(Var x);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;
  };

  Var record(Tensor value, bool requires_grad, std::function<void(Tape&)> backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Tensor& g(Var v) { return nodes_[v.id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace stack_order
