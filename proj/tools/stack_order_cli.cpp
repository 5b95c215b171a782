// stack-order: command-line front end for corpus synthesis, bank checks,
// training, evaluation and prediction.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "stack_order/binary_io.hpp"
#include "stack_order/embedding_sources.hpp"
#include "stack_order/simd/kernels.hpp"
#include "stack_order/trainer.hpp"

using namespace stack_order;

namespace {

struct ModelFlags {
  std::optional<std::uint32_t> epochs, batch, dim_in, dim_hidden;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  bool no_csk = false, no_global = false, merge_csk = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed (initialization and shuffling)");
    cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", batch, "Documents per optimizer step")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--dim-in", dim_in, "Common input width after projection")->check(CLI::PositiveNumber);
    cmd->add_option("--dim-hidden", dim_hidden, "RGCN hidden width")->check(CLI::PositiveNumber);
    attach_ablation(cmd);
  }
  void attach_ablation(CLI::App* cmd) {
    cmd->add_flag("--no-csk", no_csk, "Drop past/future nodes and their edges");
    cmd->add_flag("--no-global", no_global, "Drop the global node and its edges");
    cmd->add_flag("--merge-csk", merge_csk, "Label future edges with the past relation");
  }

  void apply(TrainConfig& c) const {
    if (seed) c.seed = *seed;
    if (epochs) c.epochs = *epochs;
    if (batch) c.batch_docs = *batch;
    if (lr) c.lr = *lr;
    if (dim_in) c.d_in = *dim_in;
    if (dim_hidden) c.d_h = *dim_hidden;
    if (no_csk) c.ablation.use_csk = false;
    if (no_global) c.ablation.use_global = false;
    if (merge_csk) c.ablation.merge_csk_relations = true;
  }

  // Flags passed to eval/predict must agree with the checkpoint.
  void check_against(const TrainConfig& c) const {
    auto mismatch = [](const char* flag, const char* trained) {
      throw std::invalid_argument(std::string("ablation mismatch: ") + flag + " given, but the checkpoint was trained " +
                                  trained);
    };
    if (no_csk && c.ablation.use_csk) mismatch("--no-csk", "with CSK nodes");
    if (no_global && c.ablation.use_global) mismatch("--no-global", "with the global node");
    if (merge_csk && !c.ablation.merge_csk_relations) mismatch("--merge-csk", "with separate past/future relations");
  }
};

Split split_from(const std::string& text) {
  if (auto s = parse_split(text)) return *s;
  throw std::invalid_argument("unknown split '" + text + "' (expected train, val or test)");
}

void write_text(const std::string& path, const std::string& text) { binary::write_file(path, text); }

std::pair<Corpus, EmbeddingBank> load_checked(const std::string& corpus_path, const std::string& bank_path) {
  Corpus corpus = read_corpus(corpus_path);
  EmbeddingBank bank = read_bank(bank_path);
  if (const BankReport report = validate_bank(corpus, bank); !report.ok()) {
    throw std::invalid_argument(bank_path + " does not match " + corpus_path + ":\n" + report.summary());
  }
  return {std::move(corpus), std::move(bank)};
}

nlohmann::ordered_json matrix_json(const Tensor& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence ordering with relational graph networks over frozen sentence embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stack-order 0.1.0");

  // synth
  SynthConfig synth_cfg;
  std::size_t synth_n = 0;
  std::string split_counts, out_corpus, out_bank;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and matching embedding bank");
  synth->add_option("--docs", synth_cfg.num_docs, "Number of documents")->capture_default_str();
  synth->add_option("--n", synth_n, "Sentences per document (sets both --n-min and --n-max)");
  synth->add_option("--n-min", synth_cfg.n_min, "Minimum sentences per document")->capture_default_str();
  synth->add_option("--n-max", synth_cfg.n_max, "Maximum sentences per document")->capture_default_str();
  synth->add_option("--dim", synth_cfg.dim, "Embedding width for every role")->capture_default_str();
  synth->add_option("--sent-noise", synth_cfg.sent_noise, "Gaussian noise on sentence vectors")->capture_default_str();
  synth->add_option("--csk-noise", synth_cfg.csk_noise, "Gaussian noise on past/future vectors")
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Random seed")->capture_default_str();
  synth->add_option("--split-counts", split_counts, "Exact train,val,test sizes, e.g. 500,60,60");
  synth->add_option("--out-corpus", out_corpus, "Corpus output (JSONL)")->required();
  synth->add_option("--out-bank", out_bank, "Bank output (STEB)")->required();

  // toy-embed
  std::string corpus_path, bank_path, out_path, config_path, checkpoint_path, report_path, split_text = "test";
  std::string log_path, doc_id;
  std::uint32_t toy_dim = 32;
  std::uint64_t toy_seed = 0;
  auto* toy = app.add_subcommand("toy-embed", "Build a hashed bag-of-words bank for a text corpus");
  toy->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  toy->add_option("--dim", toy_dim, "Embedding width (>= 8)")->capture_default_str();
  toy->add_option("--seed", toy_seed, "Random seed")->capture_default_str();
  toy->add_option("--out", out_path, "Bank output (STEB)")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Check a bank against a corpus");
  validate->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  validate->add_option("--bank", bank_path, "Bank (STEB)")->required()->check(CLI::ExistingFile);

  // train
  ModelFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model and keep the checkpoint with the best validation tau");
  train_cmd->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--bank", bank_path, "Bank (STEB)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", config_path, "key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  train_flags.attach(train_cmd);
  train_cmd->add_option("--out", out_path, "Checkpoint output")->required();
  train_cmd->add_option("--log", log_path, "Per-epoch log (JSONL); default: stdout");

  // eval
  ModelFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on one split");
  eval->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_option("--bank", bank_path, "Bank (STEB)")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint from train")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split_text, "train, val or test")->capture_default_str();
  eval->add_option("--report", report_path, "Metrics report output (JSON)");
  eval_flags.attach_ablation(eval);

  // predict
  ModelFlags predict_flags;
  auto* predict_cmd = app.add_subcommand("predict", "Predict sentence orders (JSONL, one document per line)");
  predict_cmd->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--bank", bank_path, "Bank (STEB)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint from train")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--split", split_text, "train, val or test")->capture_default_str();
  predict_cmd->add_option("--doc", doc_id, "Predict a single document instead of a split");
  predict_cmd->add_option("--out", out_path, "Output path; default: stdout");
  predict_flags.attach_ablation(predict_cmd);

  // dump-embeddings
  auto* dump = app.add_subcommand("dump-embeddings", "Write bank vectors, or trained node states, as JSONL");
  dump->add_option("--bank", bank_path, "Bank (STEB)")->required()->check(CLI::ExistingFile);
  dump->add_option("--corpus", corpus_path, "Corpus (JSONL); needed with --checkpoint")->check(CLI::ExistingFile);
  dump->add_option("--checkpoint", checkpoint_path, "Also write the RGCN hidden states of every node");
  dump->add_option("--doc", doc_id, "Only this document");
  dump->add_option("--out", out_path, "Output path; default: stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      if (synth_n) synth_cfg.n_min = synth_cfg.n_max = synth_n;
      if (!split_counts.empty()) {
        SplitCounts c;
        char sep1 = 0, sep2 = 0;
        std::istringstream in(split_counts);
        if (!(in >> c.train >> sep1 >> c.val >> sep2 >> c.test) || sep1 != ',' || sep2 != ',' || !in.eof()) {
          throw std::invalid_argument("--split-counts expects train,val,test");
        }
        synth_cfg.split_counts = c;
      }
      const auto [corpus, bank] = synthesize(synth_cfg);
      write_corpus(corpus, out_corpus);
      write_bank(bank, out_bank);
      std::printf("wrote %zu documents to %s and %s\n", corpus.size(), out_corpus.c_str(), out_bank.c_str());
    } else if (*toy) {
      const Corpus corpus = read_corpus(corpus_path);
      const EmbeddingBank bank = toy_embed(corpus, toy_dim, toy_seed);
      write_bank(bank, out_path);
      std::printf("wrote %zu records to %s\n", bank.size(), out_path.c_str());
    } else if (*validate) {
      const Corpus corpus = read_corpus(corpus_path);
      const EmbeddingBank bank = read_bank(bank_path);
      const BankReport report = validate_bank(corpus, bank);
      std::cout << report.summary() << "\n";
      return report.ok() ? 0 : 1;
    } else if (*train_cmd) {
      TrainConfig config;
      if (!config_path.empty()) {
        const std::string text = binary::read_file(config_path);
        apply_config_text(config, text, config_path);
      }
      train_flags.apply(config);
      config.validate();
      const auto [corpus, bank] = load_checked(corpus_path, bank_path);
      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path, std::ios::binary | std::ios::trunc);
        if (!log_file) throw std::runtime_error("cannot open " + log_path + " for writing");
      }
      std::ostream& log = log_path.empty() ? std::cout : log_file;
      std::fprintf(stderr, "training with %s kernels\n", std::string(simd::isa_name(simd::active().isa)).c_str());
      const TrainResult result = train(corpus, bank, config, {[&](const EpochLog& e) { log << e.to_json() << "\n"; }});
      save_checkpoint(result.best, out_path);
      std::fprintf(stderr, "best epoch %u, validation tau %.4f, saved %s\n", result.best.epoch, result.best.val_tau,
                   out_path.c_str());
    } else if (*eval) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      eval_flags.check_against(ckpt.config);
      const auto [corpus, bank] = load_checked(corpus_path, bank_path);
      const MetricsReport report = evaluate(corpus, bank, ckpt, split_from(split_text));
      std::cout << report.to_table();
      if (!report_path.empty()) write_text(report_path, report.to_json() + "\n");
    } else if (*predict_cmd) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      predict_flags.check_against(ckpt.config);
      const auto [corpus, bank] = load_checked(corpus_path, bank_path);
      std::vector<const Document*> docs;
      if (!doc_id.empty()) {
        for (const auto& d : corpus)
          if (d.doc_id == doc_id) docs.push_back(&d);
        if (docs.empty()) throw std::invalid_argument("document '" + doc_id + "' is not in " + corpus_path);
      } else {
        docs = select_split(corpus, split_from(split_text));
      }
      std::string out;
      for (const Document* doc : docs) {
        const Prediction p = predict(*doc, bank, ckpt);
        nlohmann::ordered_json j;
        j["doc_id"] = doc->doc_id;
        j["order"] = p.order;
        j["positions"] = rank_to_positions(p.order);
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < p.matrix.size(); ++i) {
          auto v = p.matrix.values().subspan(i * p.matrix.size(), p.matrix.size());
          rows.push_back(std::vector<double>(v.begin(), v.end()));
        }
        j["pairwise"] = std::move(rows);
        out += j.dump() + "\n";
      }
      if (out_path.empty())
        std::cout << out;
      else
        write_text(out_path, out);
    } else if (*dump) {
      const EmbeddingBank bank = read_bank(bank_path);
      std::optional<Checkpoint> ckpt;
      Corpus corpus;
      if (!checkpoint_path.empty()) {
        if (corpus_path.empty()) throw std::invalid_argument("--checkpoint needs --corpus");
        ckpt = load_checkpoint(checkpoint_path);
        check_compatible(*ckpt, bank.dims());
        corpus = read_corpus(corpus_path);
      }
      std::string out;
      auto emit = [&](const BankRecord& rec, const Document* doc) {
        nlohmann::ordered_json j;
        j["doc_id"] = rec.doc_id;
        for (NodeRole role : kAllRoles) j[std::string(role_name(role))] = matrix_json(rec.of(role));
        if (ckpt) {
          const DocumentGraph g = build_graph(*doc, rec, ckpt->config.ablation);
          j["hidden"] = matrix_json(encode(g, ckpt->params).hidden);
        }
        out += j.dump() + "\n";
      };
      if (ckpt) {
        for (const auto& doc : corpus)
          if (doc_id.empty() || doc.doc_id == doc_id) emit(bank.at(doc.doc_id), &doc);
      } else if (!doc_id.empty()) {
        emit(bank.at(doc_id), nullptr);
      } else {
        for (const auto& rec : bank.records()) emit(rec, nullptr);
      }
      if (out_path.empty())
        std::cout << out;
      else
        write_text(out_path, out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
