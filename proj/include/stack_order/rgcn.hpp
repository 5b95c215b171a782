#pragma once

// Two-layer relational graph convolution:
//   f(x_i, l) = ReLU( sum_r sum_{j in N_i^r} W_r^(l) x_j / |N_i^r| + W_0^(l) x_i )
// with h_i = f(f(P_role(g_i), 1), 2). Messages flow along edge direction,
// so N_i^r holds the sources of edges (j, r, i).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stack_order/autodiff.hpp"
#include "stack_order/bank.hpp"
#include "stack_order/graph.hpp"
#include "stack_order/optim.hpp"

namespace stack_order {

struct ModelShape {
  BankDims input;
  std::size_t d_in = 64;
  std::size_t d_h = 64;
  GraphConfig graph;

  /// Length of the pair feature vector m_i = [P(g_i), h_i].
  std::size_t pair_feature_width() const { return d_in + d_h; }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// All trainable weights of the graph model, kept as one ordered list of
/// named tensors so the optimizer and checkpoint code can treat them
/// uniformly.
///
///   projection.<role>        [d_in, d_role]   only when d_role != d_in
///   layer<l>.relation.<rel>  [d_h, d_in|d_h]  one per active relation
///   layer<l>.self            [d_h, d_in|d_h]
///   classifier.w             [d_in + d_h]
class ModelParameters {
 public:
  ModelParameters() = default;

  /// Xavier-uniform initialization, a = sqrt(6 / (fan_in + fan_out)).
  static ModelParameters initialize(const ModelShape& shape, std::uint64_t seed);
  /// Adopts an existing list, checking names and shapes against the layout.
  static ModelParameters from_list(const ModelShape& shape, std::vector<Parameter> list);

  const ModelShape& shape() const { return shape_; }
  std::vector<Parameter>& list() { return list_; }
  const std::vector<Parameter>& list() const { return list_; }

  std::optional<std::size_t> projection_index(NodeRole role) const;
  std::size_t relation_index(int layer, Relation r) const;
  std::size_t self_index(int layer) const;
  std::size_t classifier_index() const;

  const Tensor& at(std::size_t i) const { return list_[i].value; }

  friend bool operator==(const ModelParameters& a, const ModelParameters& b) {
    return a.shape_ == b.shape_ && a.list_ == b.list_;
  }

 private:
  std::size_t index(const std::string& name) const;
  void build_index();

  ModelShape shape_;
  std::vector<Parameter> list_;
  std::map<std::string, std::size_t> index_;
};

/// (name, shape) of every parameter, in list order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const ModelShape& shape);

/// ModelParameters recorded on a tape.
struct BoundParameters {
  const ModelParameters* params = nullptr;
  std::vector<Var> vars;

  Var operator[](std::size_t i) const { return vars[i]; }
};

/// Records every parameter on the tape, as leaves when trainable and as
/// constants otherwise.
BoundParameters bind(Tape& tape, const ModelParameters& params, bool trainable);

struct EncodedVars {
  Var inputs;  // [nodes, d_in] projected initial embeddings
  Var hidden;  // [nodes, d_h]
};

EncodedVars encode(Tape& tape, const DocumentGraph& graph, const BoundParameters& bound);

struct Encoded {
  Tensor inputs;
  Tensor hidden;
};

Encoded encode(const DocumentGraph& graph, const ModelParameters& params);

}  // namespace stack_order
