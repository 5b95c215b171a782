#pragma once

// Sentence-ordering evaluation metrics. Orders are permutations listing
// sentence ids in reading order (order[k] = id of the k-th sentence).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stack_order/order_solver.hpp"

namespace stack_order {

/// Discordant pairs between two orders of the same items, O(n log n).
std::size_t count_discordant_pairs(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

/// 1 - 2I / C(n, 2). Requires n >= 2.
double kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

/// Percent of exact matches; single-sentence orders always match.
double pmr(std::span<const Permutation> preds, std::span<const Permutation> golds);

struct PositionalAccuracy {
  double first = 0.0;  // % documents with the right first sentence
  double last = 0.0;   // % documents with the right last sentence
  double abs = 0.0;    // % of all sentences at their exact position
};
PositionalAccuracy positional_accuracies(std::span<const Permutation> preds, std::span<const Permutation> golds);

std::size_t lcs_length(std::span<const std::size_t> pred, std::span<const std::size_t> gold);
/// 100 * LCS / n
double lcs_ratio(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

/// Percent of sentences whose predicted position is within `window` of the
/// gold position.
double displacement_window(std::span<const std::size_t> pred, std::span<const std::size_t> gold,
                           std::size_t window = 1);

struct DocumentScore {
  std::string doc_id;
  std::size_t sentences = 0;
  Permutation predicted;
  std::optional<double> tau;  // absent for single-sentence documents
  bool exact = false;
  double lcs = 0.0;
};

struct MetricsReport {
  std::string split;
  std::size_t documents = 0;
  std::size_t multi_sentence_documents = 0;
  std::optional<double> tau;  // mean over multi-sentence documents
  double pmr = 0.0;
  double first_acc = 0.0;
  double last_acc = 0.0;
  double abs_acc = 0.0;
  double lcs_ratio = 0.0;  // mean of per-document ratios
  double d_win1 = 0.0;     // pooled over sentences
  std::vector<DocumentScore> per_document;

  std::string to_json(bool include_documents = true) const;
  std::string to_table() const;
};

/// Aggregates a corpus split. golds are usually identity orders.
MetricsReport summarize(std::string split, std::span<const std::string> doc_ids, std::span<const Permutation> preds,
                        std::span<const Permutation> golds);

}  // namespace stack_order
