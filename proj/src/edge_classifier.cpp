#include "stack_order/edge_classifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stack_order/simd/kernels.hpp"

namespace stack_order {

double score_pair(std::span<const double> m_i, std::span<const double> m_j, std::span<const double> w) {
  if (m_i.size() != m_j.size() || w.size() != m_i.size()) {
    throw std::invalid_argument("score_pair: lengths " + std::to_string(m_i.size()) + ", " +
                                std::to_string(m_j.size()) + " and w " + std::to_string(w.size()) + " differ");
  }
  std::vector<double> s(m_i.size());
  simd::active().sub(m_i.data(), m_j.data(), s.data(), s.size());
  for (double& v : s) v = std::sin(v);
  return simd::active().dot(w.data(), s.data(), s.size());
}

std::pair<double, double> pair_probabilities(double f) {
  const double e = std::exp(-2.0 * std::abs(f));
  const double big = 1.0 / (1.0 + e);
  // big lies in [0.5, 1], so 1 - big is exact and the pair sums to exactly 1.
  const double small = 1.0 - big;
  return f >= 0.0 ? std::pair{big, small} : std::pair{small, big};
}

void PairwiseMatrix::set_score(std::size_t i, std::size_t j, double f) {
  auto [pij, pji] = pair_probabilities(f);
  p_[i * n_ + j] = pij;
  p_[j * n_ + i] = pji;
}

void PairwiseMatrix::set(std::size_t i, std::size_t j, double p) {
  p_[i * n_ + j] = p;
  p_[j * n_ + i] = 1.0 - p;
}

Var pair_features(Tape& tape, const EncodedVars& encoded, std::size_t n) {
  return tape.concat_cols(tape.slice_rows(encoded.inputs, 0, n), tape.slice_rows(encoded.hidden, 0, n));
}

Tensor pair_features(const Encoded& encoded, std::size_t n) {
  const std::size_t a = encoded.inputs.cols(), b = encoded.hidden.cols();
  Tensor m = Tensor::matrix(n, a + b);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = encoded.inputs.row(i);
    auto h = encoded.hidden.row(i);
    auto out = m.row(i);
    std::copy(x.begin(), x.end(), out.begin());
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(a));
  }
  return m;
}

std::vector<IndexPair> forward_pairs(std::size_t n) {
  std::vector<IndexPair> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

Var forward_probabilities(Tape& tape, Var features, Var classifier, std::size_t n) {
  const auto pairs = forward_pairs(n);
  Var diffs = tape.pair_difference(features, pairs);
  Var scores = tape.matvec(tape.sin(diffs), classifier);
  return tape.pair_softmax(scores);
}

PairwiseMatrix predict_all_pairs(const DocumentGraph& graph, const Encoded& encoded, const ModelParameters& params) {
  const std::size_t n = graph.sentence_count;
  PairwiseMatrix out(n);
  if (n < 2) return out;
  const Tensor m = pair_features(encoded, n);
  std::span<const double> w = params.at(params.classifier_index()).values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.set_score(i, j, score_pair(m.row(i), m.row(j), w));
  }
  return out;
}

}  // namespace stack_order
