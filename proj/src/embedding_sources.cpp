#include "stack_order/embedding_sources.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "stack_order/rng.hpp"

namespace stack_order {
namespace {

std::vector<std::string> tokenize(const std::string& sentence) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : sentence) {
    const bool word = c >= 0x80 || std::isalnum(c);
    if (word) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void normalize(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

std::vector<double> order_invariant_mean(const Tensor& m) {
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r : order) {
    auto row = m.row(r);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  for (double& x : mean) x /= static_cast<double>(m.rows());
  return mean;
}

namespace {

Tensor random_map(std::uint64_t seed, std::string_view purpose, std::uint32_t dim) {
  Rng rng = Rng::stream(seed, purpose);
  Tensor m = Tensor::matrix(dim, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : m.values()) v = rng.normal() * scale;
  return m;
}

}  // namespace

EmbeddingBank toy_embed(const Corpus& corpus, std::uint32_t dim, std::uint64_t seed) {
  if (dim < 8) throw std::invalid_argument("toy_embed: dim must be at least 8, got " + std::to_string(dim));
  const Tensor past_map = random_map(seed, "toy-embed/past", dim);
  const Tensor future_map = random_map(seed, "toy-embed/future", dim);
  const std::uint64_t token_basis = fnv1a64("toy-embed/token", seed ^ 0xcbf29ce484222325ULL);

  EmbeddingBank bank(BankDims{dim, dim, dim, dim});
  for (const auto& doc : corpus) {
    const std::size_t n = doc.size();
    BankRecord rec;
    rec.doc_id = doc.doc_id;
    Tensor sent = Tensor::matrix(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
      if (doc.sentences[i].empty()) {
        throw std::invalid_argument("toy_embed: empty sentence " + std::to_string(i) + " in '" + doc.doc_id + "'");
      }
      auto tokens = tokenize(doc.sentences[i]);
      if (tokens.empty()) tokens.push_back(doc.sentences[i]);
      auto row = sent.row(i);
      for (const auto& tok : tokens) {
        Rng rng(fnv1a64(tok, token_basis));
        for (double& v : row) v += rng.normal();
      }
      normalize(row);
    }
    Tensor past = Tensor::matrix(n, dim);
    Tensor future = Tensor::matrix(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < dim; ++r) {
        double p = 0.0, f = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          p += past_map.at(r, c) * sent.at(i, c);
          f += future_map.at(r, c) * sent.at(i, c);
        }
        past.at(i, r) = p;
        future.at(i, r) = f;
      }
    }
    std::vector<double> global = order_invariant_mean(sent);
    normalize(global);

    rec.of(NodeRole::Sentence) = std::move(sent);
    rec.of(NodeRole::Past) = std::move(past);
    rec.of(NodeRole::Future) = std::move(future);
    rec.of(NodeRole::Global) = Tensor::matrix(1, dim, std::move(global));
    bank.add(std::move(rec));
  }
  bank.quantize();
  return bank;
}

std::pair<Corpus, EmbeddingBank> synthesize(const SynthConfig& config) {
  if (config.n_min < 2 || config.n_max > 12 || config.n_min > config.n_max) {
    throw std::invalid_argument("synthesize: sentence range [" + std::to_string(config.n_min) + ", " +
                                std::to_string(config.n_max) + "] must lie within [2, 12]");
  }
  if (!(config.sent_noise >= 0.0) || !(config.csk_noise >= 0.0)) {
    throw std::invalid_argument("synthesize: noise levels must be non-negative");
  }
  if (config.dim == 0) throw std::invalid_argument("synthesize: dim must be positive");
  if (config.num_docs == 0) throw std::invalid_argument("synthesize: num_docs must be positive");
  if (config.split_counts) {
    const auto& c = *config.split_counts;
    if (c.train + c.val + c.test != config.num_docs) {
      throw std::invalid_argument("synthesize: split counts sum to " + std::to_string(c.train + c.val + c.test) +
                                  ", expected " + std::to_string(config.num_docs));
    }
  }

  const std::uint32_t dim = config.dim;
  std::vector<double> direction(dim);
  {
    Rng rng = Rng::stream(config.seed, "synth/direction");
    for (double& v : direction) v = rng.normal();
    normalize(direction);
  }

  Rng shape_rng = Rng::stream(config.seed, "synth/shape");
  Rng noise_rng = Rng::stream(config.seed, "synth/noise");
  Rng text_rng = Rng::stream(config.seed, "synth/text");
  Rng split_rng = Rng::stream(config.seed, "synth/split");

  std::vector<Split> splits(config.num_docs);
  if (config.split_counts) {
    const auto& c = *config.split_counts;
    std::fill_n(splits.begin(), c.train, Split::Train);
    std::fill_n(splits.begin() + static_cast<std::ptrdiff_t>(c.train), c.val, Split::Val);
    std::fill(splits.begin() + static_cast<std::ptrdiff_t>(c.train + c.val), splits.end(), Split::Test);
    split_rng.shuffle(std::span<Split>(splits));
  } else {
    for (auto& s : splits) {
      const double u = split_rng.uniform();
      s = u < 0.8 ? Split::Train : (u < 0.9 ? Split::Val : Split::Test);
    }
  }

  Corpus corpus;
  EmbeddingBank bank(BankDims{dim, dim, dim, dim});
  const std::size_t width = std::to_string(config.num_docs - 1).size();
  for (std::size_t d = 0; d < config.num_docs; ++d) {
    const std::size_t n = config.n_min + shape_rng.below(config.n_max - config.n_min + 1);
    Document doc;
    std::string id = std::to_string(d);
    doc.doc_id = "synth-" + std::string(width - id.size(), '0') + id;
    doc.split = splits[d];

    BankRecord rec;
    rec.doc_id = doc.doc_id;
    Tensor sent = Tensor::matrix(n, dim), past = Tensor::matrix(n, dim), future = Tensor::matrix(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n - 1);
      for (std::size_t k = 0; k < dim; ++k) {
        sent.at(i, k) = direction[k] * t + config.sent_noise * noise_rng.normal();
      }
      for (std::size_t k = 0; k < dim; ++k) {
        past.at(i, k) = direction[k] * (t - config.csk_offset) + config.csk_noise * noise_rng.normal();
      }
      for (std::size_t k = 0; k < dim; ++k) {
        future.at(i, k) = direction[k] * (t + config.csk_offset) + config.csk_noise * noise_rng.normal();
      }
      std::string text;
      for (int w = 0; w < 6; ++w) {
        if (w) text += ' ';
        text += "w" + std::to_string(text_rng.below(1000));
      }
      doc.sentences.push_back(std::move(text));
    }
    rec.of(NodeRole::Global) = Tensor::matrix(1, dim, order_invariant_mean(sent));
    rec.of(NodeRole::Sentence) = std::move(sent);
    rec.of(NodeRole::Past) = std::move(past);
    rec.of(NodeRole::Future) = std::move(future);
    bank.add(std::move(rec));
    corpus.push_back(std::move(doc));
  }
  bank.quantize();
  return {std::move(corpus), std::move(bank)};
}

}  // namespace stack_order
