#include <stdexcept>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "support/oracles.hpp"
#include "stack_order/embedding_sources.hpp"
#include "stack_order/trainer.hpp"

using namespace stack_order;

namespace {

std::pair<Document, BankRecord> random_doc(Rng& rng, std::size_t n, const BankDims& dims) {
  Document doc{"doc", std::vector<std::string>(n, "s"), Split::Train};
  BankRecord rec;
  rec.doc_id = "doc";
  for (NodeRole role : kAllRoles) {
    Tensor t = Tensor::matrix(role == NodeRole::Global ? 1 : n, dims.of(role));
    for (double& v : t.values()) v = rng.uniform(-1, 1);
    rec.of(role) = std::move(t);
  }
  return {doc, rec};
}

std::pair<Corpus, EmbeddingBank> small_synth(std::uint64_t seed = 1) {
  SynthConfig cfg;
  cfg.num_docs = 60;
  cfg.n_min = 3;
  cfg.n_max = 6;
  cfg.dim = 8;
  cfg.sent_noise = 0.05;
  cfg.seed = seed;
  cfg.split_counts = SplitCounts{40, 10, 10};
  return synthesize(cfg);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_docs = 4;
  c.lr = 1e-3;
  c.seed = 5;
  c.d_in = 8;
  c.d_h = 6;
  return c;
}

struct ThreadOverride {
  explicit ThreadOverride(const char* value) { setenv("STACK_ORDER_THREADS", value, 1); }
  ~ThreadOverride() { unsetenv("STACK_ORDER_THREADS"); }
};

}  // namespace

TEST_CASE("identical sentence features give a loss of ln 2") {
  TrainConfig cfg;
  cfg.d_in = 6;
  cfg.d_h = 5;
  const BankDims dims{6, 6, 6, 6};
  const auto params = ModelParameters::initialize(model_shape(cfg, dims), 3);
  Rng rng(1);
  auto [doc, rec] = random_doc(rng, 4, dims);
  for (NodeRole role : {NodeRole::Sentence, NodeRole::Past, NodeRole::Future}) {
    Tensor& t = rec.of(role);
    for (std::size_t i = 1; i < t.rows(); ++i) std::copy(t.row(0).begin(), t.row(0).end(), t.row(i).begin());
  }
  CHECK(document_loss(doc, rec, params) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
}

TEST_CASE("end-to-end gradients match central differences") {
  TrainConfig cfg;
  cfg.d_in = 6;
  cfg.d_h = 5;
  const BankDims dims{4, 5, 3, 6};  // three roles need projections
  Rng rng(21);
  auto [doc, rec] = random_doc(rng, 3, dims);
  ModelParameters params = ModelParameters::initialize(model_shape(cfg, dims), 17);
  REQUIRE(params.projection_index(NodeRole::Sentence).has_value());
  const LossAndGradients lg = document_loss_and_gradients(doc, rec, params);
  CHECK(lg.edges == 3);
  CHECK(lg.loss == doctest::Approx(document_loss(doc, rec, params)).epsilon(1e-14));

  std::vector<Tensor*> targets;
  std::vector<double> analytic;
  for (std::size_t i = 0; i < params.list().size(); ++i) {
    targets.push_back(&params.list()[i].value);
    analytic.insert(analytic.end(), lg.grads[i].values().begin(), lg.grads[i].values().end());
  }
  const auto numeric = oracle::central_differences(targets, [&] { return document_loss(doc, rec, params); });
  CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("config text") {
  TrainConfig c;
  apply_config_text(c,
                    "# comment\n"
                    "epochs = 3\n"
                    "batch = 16   # trailing\n"
                    "lr=0.001\n"
                    "seed = 42\n"
                    "dim_in = 32\n"
                    "dim_hidden = 16\n"
                    "use_csk = false\n"
                    "use_global = true\n"
                    "merge_csk = yes\n");
  CHECK(c.epochs == 3);
  CHECK(c.batch_docs == 16);
  CHECK(c.lr == 0.001);
  CHECK(c.seed == 42);
  CHECK(c.d_in == 32);
  CHECK(c.d_h == 16);
  CHECK_FALSE(c.ablation.use_csk);
  CHECK(c.ablation.merge_csk_relations);

  TrainConfig again;
  apply_config_text(again, config_to_text(c));
  CHECK(again == c);

  TrainConfig bad;
  CHECK_THROWS_WITH(apply_config_text(bad, "epochs = 1\nlearning_rate = 2\n", "x.cfg"),
                    doctest::Contains("x.cfg:2"));
  CHECK_THROWS(apply_config_text(bad, "epochs = many"));
  CHECK_THROWS(apply_config_text(bad, "use_csk = perhaps"));
  TrainConfig zero;
  zero.epochs = 0;
  CHECK_THROWS(zero.validate());
}

TEST_CASE("checkpoint round trip") {
  auto [corpus, bank] = small_synth();
  const TrainResult result = train(corpus, bank, small_config());
  const std::string bytes = serialize_checkpoint(result.best);
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back == result.best);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.optimizer.step > 0);

  const auto path = std::filesystem::temp_directory_path() / "stack_order_test.ckpt";
  save_checkpoint(result.best, path.string());
  const Checkpoint loaded = load_checkpoint(path.string());
  std::filesystem::remove(path);
  CHECK(evaluate(corpus, bank, loaded, Split::Test).to_json() ==
        evaluate(corpus, bank, result.best, Split::Test).to_json());

  CHECK_THROWS_WITH(deserialize_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 5)),
                    doctest::Contains("offset"));
  std::string bad = bytes;
  bad[0] = 'Z';
  CHECK_THROWS_WITH(deserialize_checkpoint(bad), doctest::Contains("magic"));
}

TEST_CASE("training log and best checkpoint selection") {
  auto [corpus, bank] = small_synth();
  TrainConfig cfg = small_config();
  cfg.epochs = 3;
  std::vector<EpochLog> seen;
  std::size_t batches = 0;
  const TrainResult r = train(corpus, bank, cfg, {[&](const EpochLog& e) { seen.push_back(e); },
                                                  [&](std::uint32_t, std::size_t, double) { ++batches; }});
  CHECK(seen == r.log);
  CHECK(r.log.size() == 3);
  CHECK(batches == 3 * 10);
  double best = -2.0;
  std::uint32_t best_epoch = 0;
  for (const auto& e : r.log)
    if (e.val_tau > best) best = e.val_tau, best_epoch = e.epoch;
  CHECK(r.best.epoch == best_epoch);
  CHECK(r.best.val_tau == best);
  CHECK(r.best.optimizer.step == best_epoch * 10);
}

TEST_CASE("training is deterministic and independent of the worker count") {
  auto [corpus, bank] = small_synth(4);
  std::string one, four;
  {
    ThreadOverride t("1");
    one = serialize_checkpoint(train(corpus, bank, small_config()).best);
  }
  {
    ThreadOverride t("4");
    four = serialize_checkpoint(train(corpus, bank, small_config()).best);
    CHECK(serialize_checkpoint(train(corpus, bank, small_config()).best) == four);
  }
  CHECK(one == four);
}

TEST_CASE("untrained models are order-agnostic on average") {
  SynthConfig sc;
  sc.num_docs = 100;
  sc.n_min = 2;
  sc.n_max = 8;
  sc.dim = 16;
  sc.sent_noise = 0.1;
  sc.seed = 2;
  auto [corpus, bank] = synthesize(sc);
  TrainConfig cfg;
  cfg.d_in = 16;
  cfg.d_h = 16;
  double sum = 0.0;
  const int seeds = 24;
  std::vector<const Document*> docs;
  for (const auto& d : corpus) docs.push_back(&d);
  for (int s = 0; s < seeds; ++s) {
    const auto params = ModelParameters::initialize(model_shape(cfg, bank.dims()), 1000 + s);
    sum += *evaluate(docs, bank, params, "all").tau;
  }
  CHECK(std::abs(sum / seeds) < 0.15);
}

TEST_CASE("prediction edge cases") {
  auto [corpus, bank] = small_synth();
  const TrainResult r = train(corpus, bank, small_config());
  Document single{"single", {"alone"}, Split::Test};
  BankRecord rec;
  rec.doc_id = "single";
  for (NodeRole role : kAllRoles) rec.of(role) = Tensor::matrix(1, 8);
  CHECK(predict(single, rec, r.best.params).order == Permutation{0});

  Document missing{"nowhere", {"a", "b"}, Split::Test};
  CHECK_THROWS_WITH(predict(missing, bank, r.best), doctest::Contains("nowhere"));

  EmbeddingBank narrow(BankDims{4, 4, 4, 4});
  CHECK_THROWS_WITH(evaluate(corpus, narrow, r.best, Split::Test), doctest::Contains("width"));

  const auto pred = predict(corpus[0], bank, r.best);
  CHECK(is_permutation(pred.order));
  CHECK(pred.matrix.size() == corpus[0].size());
}

TEST_CASE("single-sentence splits") {
  Corpus corpus;
  EmbeddingBank bank(BankDims{4, 4, 4, 4});
  auto add = [&](std::string id, std::size_t n, Split split) {
    corpus.push_back({id, std::vector<std::string>(n, "x"), split});
    BankRecord rec;
    rec.doc_id = id;
    Rng rng(corpus.size());
    for (NodeRole role : kAllRoles) {
      Tensor t = Tensor::matrix(role == NodeRole::Global ? 1 : n, 4);
      for (double& v : t.values()) v = rng.uniform(-1, 1);
      rec.of(role) = std::move(t);
    }
    bank.add(std::move(rec));
  };
  add("t1", 3, Split::Train);
  add("v1", 1, Split::Val);
  add("s1", 1, Split::Test);
  add("s2", 1, Split::Test);
  TrainConfig cfg = small_config();
  cfg.d_in = 4;
  cfg.d_h = 4;
  CHECK_THROWS_WITH(train(corpus, bank, cfg), doctest::Contains("no multi-sentence"));

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = ModelParameters::initialize(model_shape(cfg, bank.dims()), 0);
  const MetricsReport r = evaluate(corpus, bank, ckpt, Split::Test);
  CHECK(r.pmr == 100.0);
  CHECK_FALSE(r.tau.has_value());
  CHECK(r.to_json().find("no multi-sentence documents") != std::string::npos);

  CHECK_THROWS_WITH(document_loss(corpus[1], bank.at("v1"), ckpt.params), doctest::Contains("single sentence"));
}

TEST_CASE("a bank that does not match the corpus stops training") {
  auto [corpus, bank] = small_synth();
  corpus.push_back({"extra", {"a", "b"}, Split::Train});
  CHECK_THROWS_WITH(train(corpus, bank, small_config()), doctest::Contains("extra"));
}

TEST_CASE("noiseless synthetic corpus: loss falls every epoch and the order is recovered") {
  SynthConfig sc;
  sc.num_docs = 200;
  sc.n_min = sc.n_max = 5;
  sc.dim = 32;
  sc.seed = 13;
  auto [corpus, bank] = synthesize(sc);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 13;
  const TrainResult r = train(corpus, bank, cfg);
  REQUIRE(r.log.size() == 5);
  for (std::size_t e = 1; e < r.log.size(); ++e) CHECK(r.log[e].train_loss < r.log[e - 1].train_loss);
  CHECK(r.log.back().val_tau == 1.0);
  const MetricsReport test = evaluate(corpus, bank, r.best, Split::Test);
  CHECK(*test.tau == 1.0);
  CHECK(test.pmr == 100.0);
  for (const Document* doc : select_split(corpus, Split::Test))
    CHECK(predict(*doc, bank, r.best).order == Permutation{0, 1, 2, 3, 4});
}
