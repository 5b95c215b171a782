#include "stack_order/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace stack_order {
namespace {

void check_pair(std::span<const std::size_t> pred, std::span<const std::size_t> gold, const char* op) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument(std::string(op) + ": orders have different lengths (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(gold.size()) + ")");
  }
  if (!is_permutation(pred) || !is_permutation(gold)) {
    throw std::invalid_argument(std::string(op) + ": inputs must be permutations of [0, n)");
  }
}

void check_aligned(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) +
                                " gold orders");
  }
}

std::size_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::size_t inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      tmp[k++] = v[i++];
    } else {
      inv += mid - i;
      tmp[k++] = v[j++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 100.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::size_t count_discordant_pairs(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_pair(pred, gold, "count_discordant_pairs");
  // Gold positions listed in predicted order; its inversions are the
  // discordant pairs.
  const Permutation gold_pos = rank_to_positions(gold);
  std::vector<std::size_t> seq(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) seq[k] = gold_pos[pred[k]];
  std::vector<std::size_t> tmp(seq.size());
  return merge_count(seq, tmp, 0, seq.size());
}

double kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_pair(pred, gold, "kendall_tau");
  const std::size_t n = pred.size();
  if (n < 2) throw std::invalid_argument("kendall_tau: undefined for fewer than 2 sentences");
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return 1.0 - 2.0 * static_cast<double>(count_discordant_pairs(pred, gold)) / pairs;
}

double pmr(std::span<const Permutation> preds, std::span<const Permutation> golds) {
  check_aligned(preds.size(), golds.size(), "pmr");
  std::size_t exact = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) {
    check_pair(preds[d], golds[d], "pmr");
    if (preds[d] == golds[d]) ++exact;
  }
  return percent(exact, preds.size());
}

PositionalAccuracy positional_accuracies(std::span<const Permutation> preds, std::span<const Permutation> golds) {
  check_aligned(preds.size(), golds.size(), "positional_accuracies");
  std::size_t first = 0, last = 0, exact = 0, total = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) {
    const auto& p = preds[d];
    const auto& g = golds[d];
    check_pair(p, g, "positional_accuracies");
    if (p.empty()) continue;
    if (p.front() == g.front()) ++first;
    if (p.back() == g.back()) ++last;
    for (std::size_t k = 0; k < p.size(); ++k) exact += p[k] == g[k];
    total += p.size();
  }
  return {percent(first, preds.size()), percent(last, preds.size()), percent(exact, total)};
}

std::size_t lcs_length(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  const std::size_t n = pred.size(), m = gold.size();
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = pred[i - 1] == gold[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double lcs_ratio(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_pair(pred, gold, "lcs_ratio");
  return percent(lcs_length(pred, gold), pred.size());
}

namespace {

std::size_t count_within(std::span<const std::size_t> pred, std::span<const std::size_t> gold, std::size_t window) {
  const Permutation pp = rank_to_positions(pred), gp = rank_to_positions(gold);
  std::size_t within = 0;
  for (std::size_t s = 0; s < pp.size(); ++s) {
    const std::size_t d = pp[s] > gp[s] ? pp[s] - gp[s] : gp[s] - pp[s];
    within += d <= window;
  }
  return within;
}

}  // namespace

double displacement_window(std::span<const std::size_t> pred, std::span<const std::size_t> gold, std::size_t window) {
  check_pair(pred, gold, "displacement_window");
  return percent(count_within(pred, gold, window), pred.size());
}

MetricsReport summarize(std::string split, std::span<const std::string> doc_ids, std::span<const Permutation> preds,
                        std::span<const Permutation> golds) {
  check_aligned(preds.size(), golds.size(), "summarize");
  check_aligned(doc_ids.size(), golds.size(), "summarize");
  MetricsReport r;
  r.split = std::move(split);
  r.documents = preds.size();
  double tau_sum = 0.0, lcs_sum = 0.0;
  std::size_t within = 0, sentences = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) {
    DocumentScore s;
    s.doc_id = doc_ids[d];
    s.sentences = preds[d].size();
    s.predicted = preds[d];
    s.exact = preds[d] == golds[d];
    s.lcs = lcs_ratio(preds[d], golds[d]);
    if (s.sentences >= 2) {
      s.tau = kendall_tau(preds[d], golds[d]);
      tau_sum += *s.tau;
      ++r.multi_sentence_documents;
    }
    lcs_sum += s.lcs;
    within += count_within(preds[d], golds[d], 1);
    sentences += s.sentences;
    r.per_document.push_back(std::move(s));
  }
  if (r.multi_sentence_documents > 0) r.tau = tau_sum / static_cast<double>(r.multi_sentence_documents);
  r.pmr = pmr(preds, golds);
  const auto pos = positional_accuracies(preds, golds);
  r.first_acc = pos.first;
  r.last_acc = pos.last;
  r.abs_acc = pos.abs;
  r.lcs_ratio = r.documents ? lcs_sum / static_cast<double>(r.documents) : 100.0;
  r.d_win1 = percent(within, sentences);
  return r;
}

std::string MetricsReport::to_json(bool include_documents) const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["documents"] = documents;
  j["multi_sentence_documents"] = multi_sentence_documents;
  if (tau) {
    j["tau"] = *tau;
  } else {
    j["tau"] = nullptr;
    j["tau_note"] = "no multi-sentence documents";
  }
  j["pmr"] = pmr;
  j["first_acc"] = first_acc;
  j["last_acc"] = last_acc;
  j["abs_acc"] = abs_acc;
  j["lcs_ratio"] = lcs_ratio;
  j["d_win1"] = d_win1;
  if (include_documents) {
    auto docs = nlohmann::ordered_json::array();
    for (const auto& s : per_document) {
      nlohmann::ordered_json d;
      d["doc_id"] = s.doc_id;
      d["sentences"] = s.sentences;
      d["predicted"] = s.predicted;
      d["tau"] = s.tau ? nlohmann::ordered_json(*s.tau) : nlohmann::ordered_json(nullptr);
      d["exact"] = s.exact;
      d["lcs"] = s.lcs;
      docs.push_back(std::move(d));
    }
    j["per_document"] = std::move(docs);
  }
  return j.dump();
}

std::string MetricsReport::to_table() const {
  char buf[512];
  std::string tau_text = "n/a (no multi-sentence documents)";
  if (tau) {
    std::snprintf(buf, sizeof buf, "%.4f", *tau);
    tau_text = buf;
  }
  std::snprintf(buf, sizeof buf,
                "split %s: %zu documents (%zu multi-sentence)\n"
                "  tau      %s\n"
                "  PMR      %6.2f\n"
                "  First    %6.2f\n"
                "  Last     %6.2f\n"
                "  Abs      %6.2f\n"
                "  LCS      %6.2f\n"
                "  D-Win=1  %6.2f\n",
                split.c_str(), documents, multi_sentence_documents, tau_text.c_str(), pmr, first_acc, last_acc,
                abs_acc, lcs_ratio, d_win1);
  return buf;
}

}  // namespace stack_order
