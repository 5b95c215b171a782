#pragma once

// Bank producers that need no pretrained encoder: a hashing embedder for
// arbitrary text and a synthetic corpus generator with a planted order
// signal.

#include <cstdint>
#include <optional>
#include <utility>

#include "stack_order/bank.hpp"
#include "stack_order/corpus.hpp"

namespace stack_order {

/// Mean of the rows of m, accumulated in lexicographic row order so the
/// result is bit-identical under any row permutation.
std::vector<double> order_invariant_mean(const Tensor& m);

/// Sentence vector: L2-normalized sum of per-token Gaussian vectors seeded
/// by the token hash. Past/future: the sentence vector under two fixed
/// random linear maps. Global: normalized mean of the sentence vectors,
/// summed in a canonical order so it is exactly permutation-invariant.
EmbeddingBank toy_embed(const Corpus& corpus, std::uint32_t dim, std::uint64_t seed);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

struct SynthConfig {
  std::size_t num_docs = 500;
  std::size_t n_min = 5;
  std::size_t n_max = 5;
  std::uint32_t dim = 32;
  double sent_noise = 0.0;
  double csk_noise = 0.0;
  std::uint64_t seed = 0;
  /// Offset of past/future vectors along the order direction.
  double csk_offset = 0.1;
  /// Exact split sizes (must sum to num_docs). When absent each document is
  /// drawn into train/val/test with probability 0.8/0.1/0.1.
  std::optional<SplitCounts> split_counts;
};

/// Sentence i of an n-sentence document sits at latent time t = i/(n-1):
///   sentence = u*t + N(0, sent_noise^2)
///   past     = u*(t - offset) + N(0, csk_noise^2)
///   future   = u*(t + offset) + N(0, csk_noise^2)
///   global   = mean of sentence vectors
/// for a fixed random unit direction u. Noise is per component.
std::pair<Corpus, EmbeddingBank> synthesize(const SynthConfig& config);

}  // namespace stack_order
