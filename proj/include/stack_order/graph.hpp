#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "stack_order/bank.hpp"
#include "stack_order/corpus.hpp"
#include "stack_order/tensor.hpp"

namespace stack_order {

enum class Relation : std::uint8_t {
  SentenceToSentence = 0,
  PastToSentence = 1,
  FutureToSentence = 2,
  GlobalToSentence = 3,
};
inline constexpr std::array<Relation, 4> kAllRelations{Relation::SentenceToSentence, Relation::PastToSentence,
                                                       Relation::FutureToSentence, Relation::GlobalToSentence};
std::string_view relation_name(Relation r);

/// Ablation switches for graph construction.
struct GraphConfig {
  bool use_csk = true;
  bool use_global = true;
  /// Keep both CSK node sets but label future edges with the past relation.
  bool merge_csk_relations = false;

  friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

/// Relations that can carry edges under a config, in canonical order.
std::vector<Relation> active_relations(const GraphConfig& config);

struct GraphNode {
  NodeRole role;
  std::size_t slot;  // row in the role's feature matrix
};

struct GraphEdge {
  std::size_t source;
  Relation relation;
  std::size_t target;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Typed document graph. Node order: sentences 0..n-1, then past nodes,
/// future nodes, and the global node when present.
struct DocumentGraph {
  std::size_t sentence_count = 0;
  GraphConfig config;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  /// Initial embeddings per role; roles absent under the config are left
  /// default-constructed and never referenced by a node.
  std::array<Tensor, 4> features;

  const Tensor& features_of(NodeRole r) const { return features[static_cast<std::size_t>(r)]; }
  /// For each node i, the sources j of edges (j, r, i).
  std::vector<std::vector<std::size_t>> in_neighbors(Relation r) const;
};

std::size_t expected_node_count(std::size_t n, const GraphConfig& config);
std::size_t expected_edge_count(std::size_t n, const GraphConfig& config);

DocumentGraph build_graph(const Document& doc, const BankRecord& record, const GraphConfig& config);

}  // namespace stack_order
