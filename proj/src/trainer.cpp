#include "stack_order/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "stack_order/binary_io.hpp"
#include "stack_order/parallel.hpp"
#include "stack_order/rng.hpp"

namespace stack_order {

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
  if (batch_docs == 0) throw std::invalid_argument("TrainConfig: batch size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
  if (d_in == 0 || d_h == 0) throw std::invalid_argument("TrainConfig: dimensions must be positive");
  if (!(log_eps > 0.0 && log_eps < 0.5)) throw std::invalid_argument("TrainConfig: log_eps must lie in (0, 0.5)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& v, std::string_view key, std::string_view where) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(v, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) {
      throw std::invalid_argument(std::string(where) + ": bad value '" + v + "' for " + std::string(key));
    }
  } else {
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw std::invalid_argument(std::string(where) + ": bad value '" + v + "' for " + std::string(key));
    }
  }
  return out;
}

bool parse_bool(const std::string& v, std::string_view key, std::string_view where) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument(std::string(where) + ": bad boolean '" + v + "' for " + std::string(key));
}

}  // namespace

void apply_config_text(TrainConfig& c, std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string val = trim(std::string_view(t).substr(eq + 1));
    if (key == "epochs") {
      c.epochs = parse_number<std::uint32_t>(val, key, where);
    } else if (key == "batch" || key == "batch_docs") {
      c.batch_docs = parse_number<std::uint32_t>(val, key, where);
    } else if (key == "lr") {
      c.lr = parse_number<double>(val, key, where);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(val, key, where);
    } else if (key == "dim_in") {
      c.d_in = parse_number<std::uint32_t>(val, key, where);
    } else if (key == "dim_hidden") {
      c.d_h = parse_number<std::uint32_t>(val, key, where);
    } else if (key == "use_csk") {
      c.ablation.use_csk = parse_bool(val, key, where);
    } else if (key == "use_global") {
      c.ablation.use_global = parse_bool(val, key, where);
    } else if (key == "merge_csk") {
      c.ablation.merge_csk_relations = parse_bool(val, key, where);
    } else if (key == "log_eps") {
      c.log_eps = parse_number<double>(val, key, where);
    } else {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

std::string config_to_text(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "epochs = " << c.epochs << "\n"
      << "batch = " << c.batch_docs << "\n"
      << "lr = " << c.lr << "\n"
      << "seed = " << c.seed << "\n"
      << "dim_in = " << c.d_in << "\n"
      << "dim_hidden = " << c.d_h << "\n"
      << "use_csk = " << (c.ablation.use_csk ? "true" : "false") << "\n"
      << "use_global = " << (c.ablation.use_global ? "true" : "false") << "\n"
      << "merge_csk = " << (c.ablation.merge_csk_relations ? "true" : "false") << "\n"
      << "log_eps = " << c.log_eps << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Checkpoint

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  binary::Writer w;
  w.bytes(kCheckpointMagic);
  w.u16(kCheckpointVersion);
  w.u16(0);
  const TrainConfig& c = ckpt.config;
  w.u32(c.epochs);
  w.u32(c.batch_docs);
  w.f64(c.lr);
  w.u64(c.seed);
  w.u32(c.d_in);
  w.u32(c.d_h);
  w.u8(c.ablation.use_csk);
  w.u8(c.ablation.use_global);
  w.u8(c.ablation.merge_csk_relations);
  w.u8(0);
  w.f64(c.log_eps);
  const BankDims& dims = ckpt.params.shape().input;
  for (NodeRole r : kAllRoles) w.u32(dims.of(r));
  w.u32(ckpt.epoch);
  w.f64(ckpt.val_tau);

  const auto& list = ckpt.params.list();
  w.u32(static_cast<std::uint32_t>(list.size()));
  for (const auto& p : list) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) w.u64(d);
    for (double v : p.value.values()) w.f64(v);
  }

  const AdamState& opt = ckpt.optimizer;
  w.f64(opt.config.lr);
  w.f64(opt.config.beta1);
  w.f64(opt.config.beta2);
  w.f64(opt.config.eps);
  w.u64(opt.step);
  w.u32(static_cast<std::uint32_t>(opt.first_moment.size()));
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    for (double v : opt.first_moment[i].values()) w.f64(v);
    for (double v : opt.second_moment[i].values()) w.f64(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes, std::string context) {
  binary::Reader in(bytes, std::move(context));
  if (in.bytes(4, "magic") != kCheckpointMagic) in.fail_at(0, "bad magic (expected \"STCK\")");
  const std::uint16_t version = in.u16("version");
  if (version != kCheckpointVersion) in.fail_at(4, "unsupported version " + std::to_string(version));
  in.u16("reserved");

  Checkpoint ckpt;
  TrainConfig& c = ckpt.config;
  c.epochs = in.u32("epochs");
  c.batch_docs = in.u32("batch size");
  c.lr = in.f64("learning rate");
  c.seed = in.u64("seed");
  c.d_in = in.u32("d_in");
  c.d_h = in.u32("d_h");
  c.ablation.use_csk = in.u8("use_csk") != 0;
  c.ablation.use_global = in.u8("use_global") != 0;
  c.ablation.merge_csk_relations = in.u8("merge_csk") != 0;
  in.u8("reserved");
  c.log_eps = in.f64("log_eps");
  BankDims dims;
  dims.sentence = in.u32("sentence dimension");
  dims.past = in.u32("past dimension");
  dims.future = in.u32("future dimension");
  dims.global = in.u32("global dimension");
  ckpt.epoch = in.u32("epoch");
  ckpt.val_tau = in.f64("validation tau");

  const std::uint32_t count = in.u32("parameter count");
  std::vector<Parameter> list;
  for (std::uint32_t i = 0; i < count; ++i) {
    Parameter p;
    p.name = in.str("parameter name");
    const std::uint32_t rank = in.u32("parameter rank");
    if (rank > 2) in.fail("parameter '" + p.name + "' has unsupported rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t elements = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(in.u64("parameter extent"));
      if (d != 0 && elements > in.remaining() / 8 / d) in.fail("truncated values of parameter '" + p.name + "'");
      elements *= d;
    }
    in.need(elements * 8, "values of parameter '" + p.name + "'");
    std::vector<double> values(elements);
    for (double& v : values) v = in.f64("parameter value");
    p.value = Tensor(std::move(shape), std::move(values));
    list.push_back(std::move(p));
  }
  try {
    ckpt.params = ModelParameters::from_list(model_shape(c, dims), std::move(list));
  } catch (const std::invalid_argument& e) {
    in.fail(std::string("inconsistent parameters: ") + e.what());
  }

  AdamState& opt = ckpt.optimizer;
  opt.config.lr = in.f64("optimizer lr");
  opt.config.beta1 = in.f64("optimizer beta1");
  opt.config.beta2 = in.f64("optimizer beta2");
  opt.config.eps = in.f64("optimizer eps");
  opt.step = in.u64("optimizer step");
  const std::uint32_t moments = in.u32("moment count");
  if (moments != 0 && moments != ckpt.params.list().size()) {
    in.fail("optimizer tracks " + std::to_string(moments) + " tensors for " +
            std::to_string(ckpt.params.list().size()) + " parameters");
  }
  for (std::uint32_t i = 0; i < moments; ++i) {
    const auto& shape = ckpt.params.list()[i].value.shape();
    Tensor m(shape), v(shape);
    in.need(m.size() * 16, "optimizer moments");
    for (double& x : m.values()) x = in.f64("first moment");
    for (double& x : v.values()) x = in.f64("second moment");
    opt.first_moment.push_back(std::move(m));
    opt.second_moment.push_back(std::move(v));
  }
  if (!in.at_end()) in.fail(std::to_string(in.remaining()) + " trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  binary::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(binary::read_file(path), path); }

std::string EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["val_tau"] = val_tau;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Model composition

ModelShape model_shape(const TrainConfig& config, const BankDims& dims) {
  ModelShape s;
  s.input = dims;
  s.d_in = config.d_in;
  s.d_h = config.d_h;
  s.graph = config.ablation;
  return s;
}

namespace {

Var record_loss(Tape& tape, const DocumentGraph& graph, const BoundParameters& bound, double log_eps) {
  const EncodedVars enc = encode(tape, graph, bound);
  const Var features = pair_features(tape, enc, graph.sentence_count);
  const Var w = bound[bound.params->classifier_index()];
  return tape.bce_mean(forward_probabilities(tape, features, w, graph.sentence_count), log_eps);
}

void require_pairs(const Document& doc) {
  if (doc.size() < 2) {
    throw std::invalid_argument("document '" + doc.doc_id + "' has a single sentence and no pairs to score");
  }
}

}  // namespace

double document_loss(const Document& doc, const BankRecord& record, const ModelParameters& params, double log_eps) {
  require_pairs(doc);
  Tape tape;
  const BoundParameters bound = bind(tape, params, false);
  const DocumentGraph graph = build_graph(doc, record, params.shape().graph);
  return tape.value(record_loss(tape, graph, bound, log_eps)).item();
}

LossAndGradients document_loss_and_gradients(const Document& doc, const BankRecord& record,
                                             const ModelParameters& params, double log_eps) {
  require_pairs(doc);
  Tape tape;
  const BoundParameters bound = bind(tape, params, true);
  const DocumentGraph graph = build_graph(doc, record, params.shape().graph);
  const Var loss = record_loss(tape, graph, bound, log_eps);
  tape.backward(loss);
  LossAndGradients out;
  out.loss = tape.value(loss).item();
  out.edges = doc.size() * (doc.size() - 1) / 2;
  out.grads.reserve(bound.vars.size());
  for (Var v : bound.vars) out.grads.push_back(tape.grad(v));
  return out;
}

Prediction predict(const Document& doc, const BankRecord& record, const ModelParameters& params) {
  const DocumentGraph graph = build_graph(doc, record, params.shape().graph);
  Prediction p;
  if (doc.size() == 1) {
    p.order = {0};
    p.matrix = PairwiseMatrix(1);
    return p;
  }
  const Encoded enc = encode(graph, params);
  p.matrix = predict_all_pairs(graph, enc, params);
  p.order = topological_order(p.matrix);
  return p;
}

void check_compatible(const Checkpoint& ckpt, const BankDims& dims) {
  const BankDims& want = ckpt.params.shape().input;
  for (NodeRole r : kAllRoles) {
    if (want.of(r) != dims.of(r)) {
      throw std::invalid_argument("checkpoint expects " + std::string(role_name(r)) + " vectors of width " +
                                  std::to_string(want.of(r)) + " but the bank stores width " +
                                  std::to_string(dims.of(r)));
    }
  }
}

Prediction predict(const Document& doc, const EmbeddingBank& bank, const Checkpoint& ckpt) {
  check_compatible(ckpt, bank.dims());
  return predict(doc, bank.at(doc.doc_id), ckpt.params);
}

MetricsReport evaluate(const std::vector<const Document*>& docs, const EmbeddingBank& bank,
                       const ModelParameters& params, std::string split_name) {
  std::vector<Permutation> preds(docs.size()), golds(docs.size());
  std::vector<std::string> ids(docs.size());
  parallel_for(docs.size(), worker_count(), [&](std::size_t i) {
    const Document& doc = *docs[i];
    preds[i] = predict(doc, bank.at(doc.doc_id), params).order;
  });
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ids[i] = docs[i]->doc_id;
    golds[i].resize(docs[i]->size());
    std::iota(golds[i].begin(), golds[i].end(), std::size_t{0});
  }
  return summarize(std::move(split_name), ids, preds, golds);
}

MetricsReport evaluate(const Corpus& corpus, const EmbeddingBank& bank, const Checkpoint& ckpt, Split split) {
  check_compatible(ckpt, bank.dims());
  return evaluate(select_split(corpus, split), bank, ckpt.params, std::string(split_name(split)));
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const Corpus& corpus, const EmbeddingBank& bank, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (const BankReport report = validate_bank(corpus, bank); !report.ok()) {
    throw std::invalid_argument("train: embedding bank does not match corpus: " + report.summary());
  }

  std::vector<const Document*> train_docs;
  for (const Document* d : select_split(corpus, Split::Train)) {
    if (d->size() >= 2) train_docs.push_back(d);
  }
  const auto val_docs = select_split(corpus, Split::Val);
  if (train_docs.empty()) throw std::invalid_argument("train: training split has no multi-sentence documents");
  if (val_docs.empty()) throw std::invalid_argument("train: validation split is empty");
  if (std::none_of(val_docs.begin(), val_docs.end(), [](const Document* d) { return d->size() >= 2; })) {
    throw std::invalid_argument("train: validation split has no multi-sentence documents, so tau is undefined");
  }

  ModelParameters params = ModelParameters::initialize(model_shape(config, bank.dims()), config.seed);
  AdamState optimizer;
  optimizer.config.lr = config.lr;
  Rng shuffle_rng = Rng::stream(config.seed, "train/shuffle");
  const std::size_t workers = worker_count();

  TrainResult result;
  bool have_best = false;
  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t epoch_edges = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_docs, ++batch_index) {
      const std::size_t count = std::min<std::size_t>(config.batch_docs, order.size() - start);
      std::vector<LossAndGradients> parts(count);
      parallel_for(count, workers, [&](std::size_t k) {
        const Document& doc = *train_docs[order[start + k]];
        parts[k] = document_loss_and_gradients(doc, bank.at(doc.doc_id), params, config.log_eps);
      });

      // Per-edge mean over the whole batch, reduced in document order.
      std::size_t edges = 0;
      for (const auto& p : parts) edges += p.edges;
      std::vector<Tensor> grads;
      for (const auto& p : params.list()) grads.emplace_back(p.value.shape());
      double batch_loss = 0.0;
      for (const auto& part : parts) {
        const double weight = static_cast<double>(part.edges) / static_cast<double>(edges);
        batch_loss += weight * part.loss;
        for (std::size_t i = 0; i < grads.size(); ++i) {
          Tensor& g = grads[i];
          const Tensor& pg = part.grads[i];
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += weight * pg[k];
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }
      try {
        adam_step(params.list(), grads, optimizer);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("train: epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) +
                                 ": " + e.what());
      }
      epoch_loss += batch_loss * static_cast<double>(edges);
      epoch_edges += edges;
      if (hooks.on_batch) hooks.on_batch(epoch, batch_index, batch_loss);
    }

    const MetricsReport val = evaluate(val_docs, bank, params, "val");
    EpochLog entry{epoch, epoch_loss / static_cast<double>(epoch_edges), *val.tau};
    result.log.push_back(entry);
    if (hooks.on_epoch) hooks.on_epoch(entry);

    if (!have_best || entry.val_tau > result.best.val_tau) {
      have_best = true;
      result.best.config = config;
      result.best.params = params;
      result.best.optimizer = optimizer;
      result.best.epoch = epoch;
      result.best.val_tau = entry.val_tau;
    }
  }
  return result;
}

}  // namespace stack_order
