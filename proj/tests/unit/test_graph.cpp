#include <stdexcept>
#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "doctest.h"
#include "stack_order/graph.hpp"
#include "stack_order/rng.hpp"

using namespace stack_order;

namespace {

std::vector<GraphConfig> all_configs() {
  std::vector<GraphConfig> out;
  for (int mask = 0; mask < 8; ++mask) out.push_back({bool(mask & 1), bool(mask & 2), bool(mask & 4)});
  return out;
}

std::pair<Document, BankRecord> make_doc(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Document doc{"doc", {}, Split::Train};
  for (std::size_t i = 0; i < n; ++i) doc.sentences.push_back("s" + std::to_string(i));
  BankRecord rec;
  rec.doc_id = "doc";
  for (NodeRole role : kAllRoles) {
    Tensor t = Tensor::matrix(role == NodeRole::Global ? 1 : n, dim);
    for (double& v : t.values()) v = rng.uniform(-1, 1);
    rec.of(role) = std::move(t);
  }
  return {doc, rec};
}

std::size_t count_relation(const DocumentGraph& g, Relation r) {
  return static_cast<std::size_t>(std::count_if(g.edges.begin(), g.edges.end(), [&](auto& e) { return e.relation == r; }));
}

}  // namespace

TEST_CASE("worked examples") {
  {
    auto [doc, rec] = make_doc(5, 3, 1);
    const DocumentGraph g = build_graph(doc, rec, {});
    CHECK(g.nodes.size() == 16);
    CHECK(g.edges.size() == 35);
    CHECK(count_relation(g, Relation::SentenceToSentence) == 20);
    CHECK(count_relation(g, Relation::PastToSentence) + count_relation(g, Relation::FutureToSentence) == 10);
    CHECK(count_relation(g, Relation::GlobalToSentence) == 5);
  }
  {
    auto [doc, rec] = make_doc(2, 3, 1);
    const DocumentGraph g = build_graph(doc, rec, {.use_csk = false, .use_global = true});
    CHECK(g.nodes.size() == 3);
    CHECK(g.edges.size() == 4);
    CHECK(count_relation(g, Relation::SentenceToSentence) == 2);
    CHECK(count_relation(g, Relation::GlobalToSentence) == 2);
  }
  {
    auto [doc, rec] = make_doc(1, 3, 1);
    const DocumentGraph g = build_graph(doc, rec, {});
    CHECK(g.nodes.size() == 4);
    CHECK(g.edges.size() == 3);
    CHECK(count_relation(g, Relation::SentenceToSentence) == 0);
  }
}

TEST_CASE("counts follow the closed forms for every config and n in [1, 40]") {
  for (const GraphConfig& cfg : all_configs()) {
    for (std::size_t n = 1; n <= 40; ++n) {
      auto [doc, rec] = make_doc(n, 2, n);
      const DocumentGraph g = build_graph(doc, rec, cfg);
      const std::size_t nodes = n + (cfg.use_csk ? 2 * n : 0) + (cfg.use_global ? 1 : 0);
      const std::size_t edges = n * (n - 1) + (cfg.use_csk ? 2 * n : 0) + (cfg.use_global ? n : 0);
      CHECK(g.nodes.size() == nodes);
      CHECK(g.edges.size() == edges);
      CHECK(expected_node_count(n, cfg) == nodes);
      CHECK(expected_edge_count(n, cfg) == edges);
    }
  }
}

TEST_CASE("edge directions and roles") {
  for (const GraphConfig& cfg : all_configs()) {
    auto [doc, rec] = make_doc(4, 2, 7);
    const DocumentGraph g = build_graph(doc, rec, cfg);
    std::set<std::tuple<std::size_t, int, std::size_t>> seen;
    for (const GraphEdge& e : g.edges) {
      CHECK(seen.insert({e.source, int(e.relation), e.target}).second);
      // every edge lands on a sentence
      CHECK(g.nodes[e.target].role == NodeRole::Sentence);
      CHECK(e.source != e.target);
      const NodeRole src = g.nodes[e.source].role;
      switch (e.relation) {
        case Relation::SentenceToSentence:
          CHECK(src == NodeRole::Sentence);
          break;
        case Relation::PastToSentence:
          CHECK((src == NodeRole::Past || (cfg.merge_csk_relations && src == NodeRole::Future)));
          CHECK(g.nodes[e.source].slot == g.nodes[e.target].slot);
          break;
        case Relation::FutureToSentence:
          CHECK(!cfg.merge_csk_relations);
          CHECK(src == NodeRole::Future);
          CHECK(g.nodes[e.source].slot == g.nodes[e.target].slot);
          break;
        case Relation::GlobalToSentence:
          CHECK(src == NodeRole::Global);
          break;
      }
    }
    // both directions for every sentence pair
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) CHECK(seen.count({i, int(Relation::SentenceToSentence), j}) == 1);
    if (!cfg.use_csk) {
      for (const auto& node : g.nodes) CHECK((node.role == NodeRole::Sentence || node.role == NodeRole::Global));
    }
    if (!cfg.use_global) {
      for (const auto& node : g.nodes) CHECK(node.role != NodeRole::Global);
    }
  }
}

TEST_CASE("merged relations keep both node sets") {
  auto [doc, rec] = make_doc(3, 2, 2);
  const DocumentGraph split = build_graph(doc, rec, {});
  const DocumentGraph merged = build_graph(doc, rec, {.merge_csk_relations = true});
  REQUIRE(split.edges.size() == merged.edges.size());
  CHECK(count_relation(merged, Relation::FutureToSentence) == 0);
  CHECK(count_relation(merged, Relation::PastToSentence) == 6);
  for (std::size_t k = 0; k < split.edges.size(); ++k) {
    CHECK(split.edges[k].source == merged.edges[k].source);
    CHECK(split.edges[k].target == merged.edges[k].target);
  }
  CHECK(active_relations({.merge_csk_relations = true}) ==
        std::vector<Relation>{Relation::SentenceToSentence, Relation::PastToSentence, Relation::GlobalToSentence});
}

TEST_CASE("relabeling sentences relabels the graph consistently") {
  Rng rng(11);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (const GraphConfig& cfg : all_configs()) {
      auto [doc, rec] = make_doc(n, 3, 100 + n);
      std::vector<std::size_t> perm(n);  // new slot k holds old sentence perm[k]
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(perm));
      Document pdoc = doc;
      BankRecord prec = rec;
      for (std::size_t k = 0; k < n; ++k) {
        pdoc.sentences[k] = doc.sentences[perm[k]];
        for (NodeRole role : {NodeRole::Sentence, NodeRole::Past, NodeRole::Future}) {
          auto src = rec.of(role).row(perm[k]);
          std::copy(src.begin(), src.end(), prec.of(role).row(k).begin());
        }
      }
      const DocumentGraph g = build_graph(doc, rec, cfg);
      const DocumentGraph h = build_graph(pdoc, prec, cfg);
      REQUIRE(g.nodes.size() == h.nodes.size());
      std::vector<std::size_t> new_slot(n);
      for (std::size_t k = 0; k < n; ++k) new_slot[perm[k]] = k;
      auto map_node = [&](std::size_t v) {
        const GraphNode& node = g.nodes[v];
        if (node.role == NodeRole::Global) return v;
        const std::size_t base = v - node.slot;
        return base + new_slot[node.slot];
      };
      std::set<std::tuple<std::size_t, int, std::size_t>> h_edges;
      for (const auto& e : h.edges) h_edges.insert({e.source, int(e.relation), e.target});
      REQUIRE(h_edges.size() == g.edges.size());
      for (const auto& e : g.edges) CHECK(h_edges.count({map_node(e.source), int(e.relation), map_node(e.target)}) == 1);
      for (std::size_t v = 0; v < g.nodes.size(); ++v) {
        const GraphNode& a = g.nodes[v];
        const GraphNode& b = h.nodes[map_node(v)];
        CHECK(a.role == b.role);
        const auto fa = g.features_of(a.role).row(a.slot);
        const auto fb = h.features_of(b.role).row(b.slot);
        CHECK(std::equal(fa.begin(), fa.end(), fb.begin(), fb.end()));
      }
    }
  }
}

TEST_CASE("mismatched bank records are rejected") {
  auto [doc, rec] = make_doc(3, 2, 1);
  BankRecord short_rec = rec;
  short_rec.of(NodeRole::Past) = Tensor::matrix(2, 2);
  CHECK_THROWS_WITH_AS(build_graph(doc, short_rec, {}), doctest::Contains("past"), std::invalid_argument);
  CHECK_NOTHROW(build_graph(doc, short_rec, {.use_csk = false}));
  BankRecord other = rec;
  other.doc_id = "other";
  CHECK_THROWS_AS(build_graph(doc, other, {}), std::invalid_argument);
  Document empty{"doc", {}, Split::Train};
  CHECK_THROWS_AS(build_graph(empty, rec, {}), std::invalid_argument);
}
