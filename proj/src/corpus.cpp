#include "stack_order/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace stack_order {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val" || s == "valid" || s == "dev") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

namespace {

[[noreturn]] void line_error(std::string_view source, std::size_t line, const std::string& what) {
  throw std::runtime_error(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

Document parse_record(const std::string& text, std::string_view source, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    line_error(source, line, std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) line_error(source, line, "record is not an object");
  for (const char* field : {"doc_id", "split", "sentences"}) {
    if (!j.contains(field)) line_error(source, line, std::string("missing field '") + field + "'");
  }
  if (!j["doc_id"].is_string() || j["doc_id"].get_ref<const std::string&>().empty()) {
    line_error(source, line, "doc_id must be a non-empty string");
  }
  if (!j["split"].is_string()) line_error(source, line, "split must be a string");
  auto split = parse_split(j["split"].get<std::string>());
  if (!split) line_error(source, line, "unknown split '" + j["split"].get<std::string>() + "'");
  if (!j["sentences"].is_array() || j["sentences"].empty()) {
    line_error(source, line, "sentences must be a non-empty array");
  }

  Document doc;
  doc.doc_id = j["doc_id"].get<std::string>();
  doc.split = *split;
  for (const auto& s : j["sentences"]) {
    if (!s.is_string() || s.get_ref<const std::string&>().empty()) {
      line_error(source, line, "sentence " + std::to_string(doc.sentences.size()) + " must be a non-empty string");
    }
    doc.sentences.push_back(s.get<std::string>());
  }
  return doc;
}

}  // namespace

Corpus parse_corpus(std::istream& in, std::string_view source) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc = parse_record(text, source, line);
    if (!seen.insert(doc.doc_id).second) line_error(source, line, "duplicate doc_id '" + doc.doc_id + "'");
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_corpus: cannot open '" + path + "'");
  return parse_corpus(in, path);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus) {
    nlohmann::ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["split"] = split_name(doc.split);
    j["sentences"] = doc.sentences;
    out << j.dump() << '\n';
  }
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_corpus: cannot open '" + path + "' for writing");
  write_corpus(corpus, out);
  if (!out) throw std::runtime_error("write_corpus: write to '" + path + "' failed");
}

std::vector<const Document*> select_split(const Corpus& corpus, Split split) {
  std::vector<const Document*> out;
  for (const auto& d : corpus) {
    if (d.split == split) out.push_back(&d);
  }
  return out;
}

}  // namespace stack_order
