#include "stack_order/graph.hpp"

#include <stdexcept>
#include <string>

namespace stack_order {

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::SentenceToSentence:
      return "sentence";
    case Relation::PastToSentence:
      return "past";
    case Relation::FutureToSentence:
      return "future";
    case Relation::GlobalToSentence:
      return "global";
  }
  return "?";
}

std::vector<Relation> active_relations(const GraphConfig& config) {
  std::vector<Relation> out{Relation::SentenceToSentence};
  if (config.use_csk) {
    out.push_back(Relation::PastToSentence);
    if (!config.merge_csk_relations) out.push_back(Relation::FutureToSentence);
  }
  if (config.use_global) out.push_back(Relation::GlobalToSentence);
  return out;
}

std::size_t expected_node_count(std::size_t n, const GraphConfig& config) {
  return n + (config.use_csk ? 2 * n : 0) + (config.use_global ? 1 : 0);
}

std::size_t expected_edge_count(std::size_t n, const GraphConfig& config) {
  return n * (n - 1) + (config.use_csk ? 2 * n : 0) + (config.use_global ? n : 0);
}

std::vector<std::vector<std::size_t>> DocumentGraph::in_neighbors(Relation r) const {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (const auto& e : edges) {
    if (e.relation == r) out[e.target].push_back(e.source);
  }
  return out;
}

DocumentGraph build_graph(const Document& doc, const BankRecord& record, const GraphConfig& config) {
  const std::size_t n = doc.size();
  if (n == 0) throw std::invalid_argument("build_graph: document '" + doc.doc_id + "' has no sentences");
  if (record.doc_id != doc.doc_id) {
    throw std::invalid_argument("build_graph: bank record '" + record.doc_id + "' does not belong to document '" +
                                doc.doc_id + "'");
  }
  auto require = [&](NodeRole role, std::size_t expected) {
    if (record.count(role) != expected) {
      throw std::invalid_argument("build_graph: document '" + doc.doc_id + "' has " + std::to_string(n) +
                                  " sentences but its bank record holds " + std::to_string(record.count(role)) + " " +
                                  std::string(role_name(role)) + " vectors (expected " + std::to_string(expected) +
                                  ")");
    }
  };
  require(NodeRole::Sentence, n);
  if (config.use_csk) {
    require(NodeRole::Past, n);
    require(NodeRole::Future, n);
  }
  if (config.use_global) require(NodeRole::Global, 1);

  DocumentGraph g;
  g.sentence_count = n;
  g.config = config;
  g.nodes.reserve(expected_node_count(n, config));
  g.edges.reserve(expected_edge_count(n, config));

  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({NodeRole::Sentence, i});
  g.features[static_cast<std::size_t>(NodeRole::Sentence)] = record.of(NodeRole::Sentence);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) g.edges.push_back({i, Relation::SentenceToSentence, j});
    }
  }

  if (config.use_csk) {
    const std::size_t past0 = g.nodes.size();
    for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({NodeRole::Past, i});
    const std::size_t future0 = g.nodes.size();
    for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({NodeRole::Future, i});
    const Relation future_rel = config.merge_csk_relations ? Relation::PastToSentence : Relation::FutureToSentence;
    for (std::size_t i = 0; i < n; ++i) g.edges.push_back({past0 + i, Relation::PastToSentence, i});
    for (std::size_t i = 0; i < n; ++i) g.edges.push_back({future0 + i, future_rel, i});
    g.features[static_cast<std::size_t>(NodeRole::Past)] = record.of(NodeRole::Past);
    g.features[static_cast<std::size_t>(NodeRole::Future)] = record.of(NodeRole::Future);
  }

  if (config.use_global) {
    const std::size_t global = g.nodes.size();
    g.nodes.push_back({NodeRole::Global, 0});
    for (std::size_t i = 0; i < n; ++i) g.edges.push_back({global, Relation::GlobalToSentence, i});
    g.features[static_cast<std::size_t>(NodeRole::Global)] = record.of(NodeRole::Global);
  }
  return g;
}

}  // namespace stack_order
