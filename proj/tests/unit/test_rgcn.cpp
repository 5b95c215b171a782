#include <stdexcept>
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "support/oracles.hpp"
#include "stack_order/rgcn.hpp"

using namespace stack_order;

namespace {

std::pair<Document, BankRecord> random_doc(Rng& rng, std::size_t n, const BankDims& dims) {
  Document doc{"doc", {}, Split::Train};
  for (std::size_t i = 0; i < n; ++i) doc.sentences.push_back("s");
  BankRecord rec;
  rec.doc_id = "doc";
  for (NodeRole role : kAllRoles) {
    Tensor t = Tensor::matrix(role == NodeRole::Global ? 1 : n, dims.of(role));
    for (double& v : t.values()) v = rng.uniform(-1, 1);
    rec.of(role) = std::move(t);
  }
  return {doc, rec};
}

double max_abs_diff(const Tensor& t, const std::vector<std::vector<double>>& d) {
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < d[i].size(); ++k) worst = std::max(worst, std::abs(t.at(i, k) - d[i][k]));
  return worst;
}

ModelParameters with_values(const ModelShape& shape, auto&& fill) {
  std::vector<Parameter> list;
  for (auto& [name, dims] : parameter_layout(shape)) {
    Tensor t(dims);
    fill(name, t);
    list.push_back({name, std::move(t)});
  }
  return ModelParameters::from_list(shape, std::move(list));
}

void set_identity(Tensor& t) {
  t.fill(0.0);
  for (std::size_t i = 0; i < std::min(t.rows(), t.cols()); ++i) t.at(i, i) = 1.0;
}

}  // namespace

TEST_CASE("parameter layout") {
  ModelShape shape{BankDims{8, 8, 6, 8}, 8, 5, {}};
  const auto layout = parameter_layout(shape);
  std::vector<std::string> names;
  for (auto& [n, d] : layout) names.push_back(n);
  CHECK(std::count(names.begin(), names.end(), "projection.future") == 1);
  CHECK(std::count(names.begin(), names.end(), "projection.sentence") == 0);
  CHECK(names.back() == "classifier.w");

  const ModelParameters p = ModelParameters::initialize(shape, 3);
  CHECK(p.at(p.relation_index(1, Relation::PastToSentence)).shape() == std::vector<std::size_t>{5, 8});
  CHECK(p.at(p.relation_index(2, Relation::PastToSentence)).shape() == std::vector<std::size_t>{5, 5});
  CHECK(p.at(p.classifier_index()).shape() == std::vector<std::size_t>{13});
  CHECK(p.projection_index(NodeRole::Future).has_value());
  CHECK_FALSE(p.projection_index(NodeRole::Global).has_value());
  CHECK(p == ModelParameters::initialize(shape, 3));
  CHECK_FALSE(p == ModelParameters::initialize(shape, 4));

  // Xavier bound
  const Tensor& w = p.at(p.relation_index(1, Relation::SentenceToSentence));
  const double a = std::sqrt(6.0 / (8 + 5));
  for (double v : w.values()) CHECK(std::abs(v) <= a);

  ModelShape merged = shape;
  merged.graph.merge_csk_relations = true;
  CHECK_THROWS(ModelParameters::initialize(merged, 0).relation_index(1, Relation::FutureToSentence));

  auto list = p.list();
  list.pop_back();
  CHECK_THROWS_AS(ModelParameters::from_list(shape, list), std::invalid_argument);
}

TEST_CASE("isolated node with identity self weights gives ReLU(ReLU(g))") {
  ModelShape shape{BankDims{4, 4, 4, 4}, 4, 4, {.use_csk = false, .use_global = false}};
  Rng rng(5);
  const auto params = with_values(shape, [&](const std::string& name, Tensor& t) {
    if (name.find("self") != std::string::npos)
      set_identity(t);
    else
      for (double& v : t.values()) v = rng.uniform(-3, 3);
  });
  Document doc{"doc", {"only"}, Split::Test};
  BankRecord rec;
  rec.doc_id = "doc";
  rec.of(NodeRole::Sentence) = Tensor::matrix(1, 4, {0.5, -1.0, 2.0, -0.25});
  const auto enc = encode(build_graph(doc, rec, shape.graph), params);
  CHECK(enc.hidden == Tensor::matrix(1, 4, {0.5, 0.0, 2.0, 0.0}));
  CHECK(enc.inputs == rec.of(NodeRole::Sentence));
}

TEST_CASE("two in-neighbors carrying the same state deliver exactly W_r x") {
  ModelShape shape{BankDims{3, 3, 3, 3}, 3, 3, {.use_csk = false, .use_global = false}};
  const Tensor wr = Tensor::matrix(3, 3, {1, -2, 0, 3, 1, -1, 0, 2, 2});
  const auto params = with_values(shape, [&](const std::string& name, Tensor& t) {
    if (name == "layer1.relation.sentence")
      t = wr;
    else if (name == "layer2.self")
      set_identity(t);
    else
      t.fill(0.0);
  });
  Document doc{"doc", {"a", "b", "c"}, Split::Test};
  BankRecord rec;
  rec.doc_id = "doc";
  rec.of(NodeRole::Sentence) = Tensor::matrix(3, 3, {9, 9, 9, 1, 2, 3, 1, 2, 3});
  const auto enc = encode(build_graph(doc, rec, shape.graph), params);
  // W_r x for x = (1, 2, 3), then ReLU: (-3, 2, 10) -> (0, 2, 10)
  CHECK(enc.hidden.at(0, 0) == 0.0);
  CHECK(enc.hidden.at(0, 1) == 2.0);
  CHECK(enc.hidden.at(0, 2) == 10.0);
}

TEST_CASE("sparse encoder agrees with the dense adjacency oracle") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const GraphConfig cfg{rng.below(2) == 1, rng.below(2) == 1, rng.below(2) == 1};
    const BankDims dims{static_cast<std::uint32_t>(3 + rng.below(4)), static_cast<std::uint32_t>(3 + rng.below(4)),
                        static_cast<std::uint32_t>(3 + rng.below(4)), 5};
    ModelShape shape{dims, 5, static_cast<std::size_t>(2 + rng.below(5)), cfg};
    const auto params = ModelParameters::initialize(shape, rng.next_u64());
    auto [doc, rec] = random_doc(rng, n, dims);
    const DocumentGraph g = build_graph(doc, rec, cfg);
    const Encoded enc = encode(g, params);
    const auto dense = oracle::dense_rgcn(g, params);
    worst = std::max({worst, max_abs_diff(enc.inputs, dense.inputs), max_abs_diff(enc.hidden, dense.hidden)});
    for (double v : enc.hidden.values()) CHECK(v >= 0.0);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("tape and tensor encoders agree") {
  Rng rng(8);
  ModelShape shape{BankDims{6, 6, 6, 6}, 4, 3, {}};
  const auto params = ModelParameters::initialize(shape, 1);
  auto [doc, rec] = random_doc(rng, 4, shape.input);
  const DocumentGraph g = build_graph(doc, rec, shape.graph);
  Tape tape;
  const auto bound = bind(tape, params, true);
  const auto vars = encode(tape, g, bound);
  CHECK(tape.value(vars.hidden) == encode(g, params).hidden);
}

TEST_CASE("permuting sentences permutes the sentence states") {
  Rng rng(31);
  ModelShape shape{BankDims{5, 5, 5, 5}, 5, 6, {}};
  const auto params = ModelParameters::initialize(shape, 9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    auto [doc, rec] = random_doc(rng, n, shape.input);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    BankRecord prec = rec;
    for (std::size_t k = 0; k < n; ++k)
      for (NodeRole role : {NodeRole::Sentence, NodeRole::Past, NodeRole::Future}) {
        auto src = rec.of(role).row(perm[k]);
        std::copy(src.begin(), src.end(), prec.of(role).row(k).begin());
      }
    const Tensor a = encode(build_graph(doc, rec, shape.graph), params).hidden;
    const Tensor b = encode(build_graph(doc, prec, shape.graph), params).hidden;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < shape.d_h; ++c) CHECK(b.at(k, c) == doctest::Approx(a.at(perm[k], c)).epsilon(1e-12));
  }
}

TEST_CASE("removing CSK edges equals removing their message terms") {
  Rng rng(77);
  ModelShape full{BankDims{4, 4, 4, 4}, 4, 5, {}};
  ModelShape bare = full;
  bare.graph.use_csk = false;
  const auto init = ModelParameters::initialize(full, 12);
  auto pick = [&](const ModelShape& shape, bool zero_csk) {
    return with_values(shape, [&](const std::string& name, Tensor& t) {
      const auto& src = init.list();
      auto it = std::find_if(src.begin(), src.end(), [&](const Parameter& p) { return p.name == name; });
      t = it->value;
      if (zero_csk && (name.find("past") != std::string::npos || name.find("future") != std::string::npos)) t.fill(0.0);
    });
  };
  const auto full_zeroed = pick(full, true);
  const auto bare_params = pick(bare, false);
  const auto full_params = pick(full, false);
  for (int trial = 0; trial < 5; ++trial) {
    auto [doc, rec] = random_doc(rng, 2 + rng.below(4), full.input);
    const std::size_t n = doc.size();
    const Tensor with_zero_weights = encode(build_graph(doc, rec, full.graph), full_zeroed).hidden;
    const Tensor without = encode(build_graph(doc, rec, bare.graph), bare_params).hidden;
    BankRecord silent = rec;
    silent.of(NodeRole::Past).fill(0.0);
    silent.of(NodeRole::Future).fill(0.0);
    const Tensor with_zero_nodes = encode(build_graph(doc, silent, full.graph), full_params).hidden;
    const Tensor with_signal = encode(build_graph(doc, rec, full.graph), full_params).hidden;
    double signal_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < full.d_h; ++c) {
        CHECK(with_zero_weights.at(i, c) == doctest::Approx(without.at(i, c)).epsilon(1e-12));
        CHECK(with_zero_nodes.at(i, c) == doctest::Approx(without.at(i, c)).epsilon(1e-12));
        signal_gap = std::max(signal_gap, std::abs(with_signal.at(i, c) - without.at(i, c)));
      }
    CHECK(signal_gap > 1e-6);
  }
}

TEST_CASE("config mismatch between graph and parameters is an error") {
  Rng rng(1);
  ModelShape shape{BankDims{4, 4, 4, 4}, 4, 4, {}};
  const auto params = ModelParameters::initialize(shape, 0);
  auto [doc, rec] = random_doc(rng, 3, shape.input);
  CHECK_THROWS(encode(build_graph(doc, rec, {.use_global = false}), params));
}
