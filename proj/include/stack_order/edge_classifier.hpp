#pragma once

// Antisymmetric pairwise order scoring: f(m_i, m_j) = w . sin(m_i - m_j),
// turned into the edge pair (p_ij, p_ji) = softmax(f, -f).

#include <span>
#include <utility>
#include <vector>

#include "stack_order/autodiff.hpp"
#include "stack_order/rgcn.hpp"

namespace stack_order {

double score_pair(std::span<const double> m_i, std::span<const double> m_j, std::span<const double> w);

/// (p_ij, p_ji), evaluated without overflow for any finite f.
std::pair<double, double> pair_probabilities(double f);

/// n x n matrix of p_ij for i != j; the diagonal holds 0.5 and is unused.
class PairwiseMatrix {
 public:
  PairwiseMatrix() = default;
  explicit PairwiseMatrix(std::size_t n) : n_(n), p_(n * n, 0.5) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
  /// Sets p_ij and p_ji from one score.
  void set_score(std::size_t i, std::size_t j, double f);
  /// Sets p_ij = p and p_ji = 1 - p.
  void set(std::size_t i, std::size_t j, double p);

  std::span<const double> values() const { return p_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> p_;
};

/// Rows [P(g_i), h_i] for the sentence nodes, in storage order.
Var pair_features(Tape& tape, const EncodedVars& encoded, std::size_t sentence_count);
Tensor pair_features(const Encoded& encoded, std::size_t sentence_count);

/// All (i, j) with i < j, row-major: the gold-forward edges of a document
/// stored in gold order.
std::vector<IndexPair> forward_pairs(std::size_t n);

/// p_ij for every forward pair (i < j), as a vector on the tape.
Var forward_probabilities(Tape& tape, Var features, Var classifier, std::size_t sentence_count);

PairwiseMatrix predict_all_pairs(const DocumentGraph& graph, const Encoded& encoded, const ModelParameters& params);

}  // namespace stack_order
