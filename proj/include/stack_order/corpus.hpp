#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stack_order {

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

/// A document whose sentences are stored in gold order.
struct Document {
  std::string doc_id;
  std::vector<std::string> sentences;
  Split split = Split::Train;

  std::size_t size() const { return sentences.size(); }
  friend bool operator==(const Document&, const Document&) = default;
};

using Corpus = std::vector<Document>;

/// One JSON object per line: {"doc_id": ..., "split": ..., "sentences": [...]}.
/// Blank lines are skipped. Errors carry the 1-based line number.
Corpus read_corpus(const std::string& path);
Corpus parse_corpus(std::istream& in, std::string_view source = "<stream>");

void write_corpus(const Corpus& corpus, const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

std::vector<const Document*> select_split(const Corpus& corpus, Split split);

}  // namespace stack_order
