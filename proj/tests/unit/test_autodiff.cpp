#include <stdexcept>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stack_order/autodiff.hpp"
#include "stack_order/rng.hpp"
#include "support/oracles.hpp"

using namespace stack_order;

TEST_CASE("forward values of elementwise ops") {
  Tape t;
  Var x = t.constant(Tensor::vector({-1.0, 2.0}));
  CHECK(t.value(t.relu(x)) == Tensor::vector({0.0, 2.0}));

  Var s = t.sin(t.constant(Tensor::vector({0.0, std::numbers::pi / 2})));
  CHECK(t.value(s)[0] == 0.0);
  CHECK(t.value(s)[1] == doctest::Approx(1.0).epsilon(1e-15));

  Var p = t.pair_softmax(t.constant(Tensor::vector({0.0})));
  CHECK(t.value(p)[0] == 0.5);
}

TEST_CASE("pair_softmax saturates without overflow") {
  Tape t;
  Var p = t.pair_softmax(t.constant(Tensor::vector({20.0, -20.0, 800.0, -800.0})));
  const Tensor& v = t.value(p);
  CHECK(v.all_finite());
  CHECK(std::abs(v[0] - 1.0) < 1e-9);
  CHECK(v[1] < 1e-9);
  CHECK(v[2] == 1.0);
  CHECK(v[3] == 0.0);
}

TEST_CASE("gradient of a dot product is the other operand") {
  Tape t;
  Var w = t.leaf(Tensor::vector({0.5, -1.0, 2.0}));
  Var x = t.constant(Tensor::vector({3.0, 4.0, -5.0}));
  Var loss = t.dot(w, x);
  t.backward(loss);
  CHECK(t.grad(w) == Tensor::vector({3.0, 4.0, -5.0}));
}

TEST_CASE("mean of sine at zero has gradient 1/k") {
  for (std::size_t k : {1u, 4u, 7u}) {
    Tape t;
    Var x = t.leaf(Tensor({k}));
    t.backward(t.mean(t.sin(x)));
    for (double g : t.grad(x).values()) CHECK(g == doctest::Approx(1.0 / static_cast<double>(k)));
  }
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(t.relu(x)), std::invalid_argument);
}

TEST_CASE("shape errors name the operation and both shapes") {
  Tape t;
  Var a = t.leaf(Tensor::vector({1.0, 2.0}));
  Var b = t.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  try {
    t.add(a, b);
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
  CHECK_THROWS_AS(t.matmul_nt(a, t.leaf(Tensor::matrix(4, 3))), std::invalid_argument);
  CHECK_THROWS_AS(t.dot(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.bce_mean(t.leaf(Tensor({0}))), std::invalid_argument);
}

TEST_CASE("unused leaves get zero gradients") {
  Tape t;
  Var used = t.leaf(Tensor::vector({1.0, 2.0}));
  Var unused = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  t.backward(t.mean(t.sin(used)));
  CHECK(t.grad(unused) == Tensor::matrix(2, 2));
}

TEST_CASE("gradient of a sum of losses is the sum of gradients") {
  Rng rng(3);
  const Tensor w0 = oracle::random_tensor(rng, {4, 3});
  const Tensor x0 = oracle::random_tensor(rng, {5, 3});

  auto loss_a = [](Tape& t, Var w, Var x) { return t.mean(t.sin(t.matmul_nt(x, w))); };
  auto loss_b = [](Tape& t, Var w, Var x) { return t.mean(t.relu(t.matmul_nt(x, w))); };

  Tape ta;
  Var wa = ta.leaf(w0), xa = ta.leaf(x0);
  ta.backward(loss_a(ta, wa, xa));
  Tape tb;
  Var wb = tb.leaf(w0), xb = tb.leaf(x0);
  tb.backward(loss_b(tb, wb, xb));
  Tape ts;
  Var ws = ts.leaf(w0), xs = ts.leaf(x0);
  ts.backward(ts.add(loss_a(ts, ws, xs), loss_b(ts, ws, xs)));

  for (std::size_t k = 0; k < w0.size(); ++k) {
    CHECK(ts.grad(ws)[k] == doctest::Approx(ta.grad(wa)[k] + tb.grad(wb)[k]).epsilon(1e-14));
  }
  for (std::size_t k = 0; k < x0.size(); ++k) {
    CHECK(ts.grad(xs)[k] == doctest::Approx(ta.grad(xa)[k] + tb.grad(xb)[k]).epsilon(1e-14));
  }
}

TEST_CASE("backward is deterministic and repeatable") {
  Rng rng(5);
  const Tensor w0 = oracle::random_tensor(rng, {3, 3});
  Tape t;
  Var w = t.leaf(w0);
  Var loss = t.mean(t.sin(t.matmul_nt(t.relu(w), w)));
  t.backward(loss);
  const Tensor first = t.grad(w);
  t.backward(loss);
  CHECK(t.grad(w) == first);
}

namespace {

// Builds a scalar from the op under test; sin() keeps the downstream
// weights non-uniform so every output element matters.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

double gradcheck(std::vector<Tensor> inputs, const Builder& build) {
  Tape t;
  std::vector<Var> leaves;
  for (const auto& in : inputs) leaves.push_back(t.leaf(in));
  const Var out = build(t, leaves);
  t.backward(t.mean(t.sin(out)));
  std::vector<double> analytic;
  for (Var v : leaves)
    for (double g : t.grad(v).values()) analytic.push_back(g);

  std::vector<Tensor*> ptrs;
  for (auto& in : inputs) ptrs.push_back(&in);
  auto f = [&] {
    Tape ft;
    std::vector<Var> fl;
    for (const auto& in : inputs) fl.push_back(ft.constant(in));
    return ft.value(ft.mean(ft.sin(build(ft, fl)))).item();
  };
  return oracle::max_relative_error(analytic, oracle::central_differences(ptrs, f));
}

}  // namespace

TEST_CASE("every operation passes a finite-difference check over 100 seeds") {
  const std::vector<std::vector<std::size_t>> pair_sources{{1, 2}, {}, {0}, {0, 1, 2, 3}};
  const std::vector<IndexPair> pairs{{0, 1}, {2, 0}, {3, 1}, {1, 2}};

  struct Case {
    const char* name;
    std::vector<std::vector<std::size_t>> shapes;
    Builder build;
  };
  const std::vector<Case> cases{
      {"matmul_nt", {{4, 3}, {5, 3}}, [](Tape& t, const auto& v) { return t.matmul_nt(v[0], v[1]); }},
      {"matmul_nt vector", {{3}, {5, 3}}, [](Tape& t, const auto& v) { return t.matmul_nt(v[0], v[1]); }},
      {"matvec", {{4, 3}, {3}}, [](Tape& t, const auto& v) { return t.matvec(v[0], v[1]); }},
      {"dot", {{6}, {6}}, [](Tape& t, const auto& v) { return t.dot(v[0], v[1]); }},
      {"add", {{2, 3}, {2, 3}}, [](Tape& t, const auto& v) { return t.add(v[0], v[1]); }},
      {"sub", {{2, 3}, {2, 3}}, [](Tape& t, const auto& v) { return t.sub(v[0], v[1]); }},
      {"relu", {{3, 4}}, [](Tape& t, const auto& v) { return t.relu(v[0]); }},
      {"sin", {{3, 4}}, [](Tape& t, const auto& v) { return t.sin(v[0]); }},
      {"concat_rows", {{2, 3}, {1, 3}, {4, 3}},
       [](Tape& t, const auto& v) { return t.concat_rows(std::vector<Var>{v[0], v[1], v[2]}); }},
      {"concat_cols", {{3, 2}, {3, 4}}, [](Tape& t, const auto& v) { return t.concat_cols(v[0], v[1]); }},
      {"slice_rows", {{5, 3}}, [](Tape& t, const auto& v) { return t.slice_rows(v[0], 1, 4); }},
      {"neighbor_mean", {{4, 3}},
       [&pair_sources](Tape& t, const auto& v) { return t.neighbor_mean(v[0], pair_sources); }},
      {"pair_difference", {{4, 3}}, [&pairs](Tape& t, const auto& v) { return t.pair_difference(v[0], pairs); }},
      {"pair_softmax", {{5}}, [](Tape& t, const auto& v) { return t.pair_softmax(v[0]); }},
      {"bce_mean", {{5}},
       [](Tape& t, const auto& v) { return t.bce_mean(t.pair_softmax(v[0])); }},
      {"mean", {{3, 3}}, [](Tape& t, const auto& v) { return t.mean(v[0]); }},
  };

  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      std::vector<Tensor> inputs;
      for (const auto& s : c.shapes) inputs.push_back(oracle::random_tensor(rng, s, 1.5));
      worst = std::max(worst, gradcheck(std::move(inputs), c.build));
    }
    CHECK(worst < 1e-4);
  }
}
