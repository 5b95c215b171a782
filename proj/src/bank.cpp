#include "stack_order/bank.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "stack_order/binary_io.hpp"

namespace stack_order {

std::string_view role_name(NodeRole r) {
  switch (r) {
    case NodeRole::Sentence:
      return "sentence";
    case NodeRole::Past:
      return "past";
    case NodeRole::Future:
      return "future";
    case NodeRole::Global:
      return "global";
  }
  return "?";
}

std::uint32_t BankDims::of(NodeRole r) const {
  switch (r) {
    case NodeRole::Sentence:
      return sentence;
    case NodeRole::Past:
      return past;
    case NodeRole::Future:
      return future;
    case NodeRole::Global:
      return global;
  }
  return 0;
}

std::size_t BankRecord::total_vectors() const {
  std::size_t n = 0;
  for (NodeRole r : kAllRoles) n += count(r);
  return n;
}

void EmbeddingBank::add(BankRecord record) {
  for (NodeRole r : kAllRoles) {
    const Tensor& t = record.of(r);
    if (t.rank() != 2) {
      throw std::invalid_argument("EmbeddingBank::add: " + std::string(role_name(r)) + " vectors of '" +
                                  record.doc_id + "' must be a matrix");
    }
    if (t.cols() != dims_.of(r)) {
      throw std::invalid_argument("EmbeddingBank::add: " + std::string(role_name(r)) + " width " +
                                  std::to_string(t.cols()) + " of '" + record.doc_id + "' does not match bank width " +
                                  std::to_string(dims_.of(r)));
    }
  }
  if (index_.contains(record.doc_id)) {
    throw std::invalid_argument("EmbeddingBank::add: duplicate doc_id '" + record.doc_id + "'");
  }
  index_.emplace(record.doc_id, records_.size());
  records_.push_back(std::move(record));
}

const BankRecord* EmbeddingBank::find(std::string_view doc_id) const {
  auto it = index_.find(std::string(doc_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const BankRecord& EmbeddingBank::at(std::string_view doc_id) const {
  const BankRecord* r = find(doc_id);
  if (!r) throw std::out_of_range("embedding bank has no record for doc_id '" + std::string(doc_id) + "'");
  return *r;
}

void EmbeddingBank::quantize() {
  for (auto& rec : records_) {
    for (auto& t : rec.vectors) {
      for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
    }
  }
}

std::string serialize_bank(const EmbeddingBank& bank) {
  binary::Writer w;
  w.bytes(kBankMagic);
  w.u16(kBankVersion);
  w.u16(0);
  for (NodeRole r : kAllRoles) w.u32(bank.dims().of(r));
  w.u64(bank.size());
  for (const auto& rec : bank.records()) {
    w.str(rec.doc_id);
    for (NodeRole r : kAllRoles) w.u32(static_cast<std::uint32_t>(rec.count(r)));
    for (NodeRole r : kAllRoles) {
      for (double v : rec.of(r).values()) w.f32(static_cast<float>(v));
    }
  }
  return w.take();
}

EmbeddingBank deserialize_bank(std::string_view bytes, std::string context) {
  binary::Reader in(bytes, std::move(context));
  if (in.bytes(4, "magic") != kBankMagic) in.fail_at(0, "bad magic (expected \"STEB\")");
  const std::uint16_t version = in.u16("version");
  if (version != kBankVersion) in.fail_at(4, "unsupported version " + std::to_string(version));
  in.u16("reserved");
  BankDims dims;
  dims.sentence = in.u32("sentence dimension");
  dims.past = in.u32("past dimension");
  dims.future = in.u32("future dimension");
  dims.global = in.u32("global dimension");
  const std::uint64_t docs = in.u64("document count");

  EmbeddingBank bank(dims);
  for (std::uint64_t d = 0; d < docs; ++d) {
    const std::size_t record_start = in.offset();
    BankRecord rec;
    rec.doc_id = in.str("doc_id");
    std::array<std::uint32_t, 4> counts{};
    for (auto& c : counts) c = in.u32("vector count");
    for (NodeRole r : kAllRoles) {
      const std::size_t rows = counts[static_cast<std::size_t>(r)];
      const std::size_t width = dims.of(r);
      if (width != 0 && rows > in.remaining() / 4 / width) {
        in.fail("truncated " + std::string(role_name(r)) + " vectors of '" + rec.doc_id + "' (declared " +
                std::to_string(rows) + " x " + std::to_string(width) + ", " + std::to_string(in.remaining()) +
                " bytes left)");
      }
      std::vector<double> values(rows * width);
      for (double& v : values) v = in.f32("vector value");
      rec.of(r) = Tensor::matrix(rows, width, std::move(values));
    }
    if (bank.find(rec.doc_id)) in.fail_at(record_start, "duplicate doc_id '" + rec.doc_id + "'");
    bank.add(std::move(rec));
  }
  if (!in.at_end()) in.fail(std::to_string(in.remaining()) + " trailing bytes after last record");
  return bank;
}

void write_bank(const EmbeddingBank& bank, const std::string& path) { binary::write_file(path, serialize_bank(bank)); }

EmbeddingBank read_bank(const std::string& path) { return deserialize_bank(binary::read_file(path), path); }

std::string BankReport::summary() const {
  if (ok()) return "ok";
  std::string s = std::to_string(findings.size()) + " finding(s):";
  for (const auto& f : findings) s += "\n  " + f.message;
  return s;
}

BankReport validate_bank(const Corpus& corpus, const EmbeddingBank& bank) {
  BankReport report;
  auto add = [&](BankFinding::Kind kind, const std::string& id, std::string message) {
    report.findings.push_back({kind, id, std::move(message)});
  };

  std::unordered_set<std::string> corpus_ids;
  for (const auto& doc : corpus) {
    corpus_ids.insert(doc.doc_id);
    const BankRecord* rec = bank.find(doc.doc_id);
    if (!rec) {
      add(BankFinding::Kind::MissingDocument, doc.doc_id, "'" + doc.doc_id + "': missing from bank");
      continue;
    }
    const std::size_t n = doc.size();
    const std::size_t expected_total = 3 * n + 1;
    bool counts_ok = rec->total_vectors() == expected_total;
    for (NodeRole r : kAllRoles) {
      const std::size_t expected = r == NodeRole::Global ? 1 : n;
      counts_ok = counts_ok && rec->count(r) == expected;
    }
    if (!counts_ok) {
      add(BankFinding::Kind::CountMismatch, doc.doc_id,
          "'" + doc.doc_id + "': expected " + std::to_string(expected_total) + " vectors (" + std::to_string(n) +
              " sentence, " + std::to_string(n) + " past, " + std::to_string(n) + " future, 1 global), found " +
              std::to_string(rec->total_vectors()) + " (" + std::to_string(rec->count(NodeRole::Sentence)) + ", " +
              std::to_string(rec->count(NodeRole::Past)) + ", " + std::to_string(rec->count(NodeRole::Future)) +
              ", " + std::to_string(rec->count(NodeRole::Global)) + ")");
    }
    for (NodeRole r : kAllRoles) {
      if (!rec->of(r).all_finite()) {
        add(BankFinding::Kind::NonFinite, doc.doc_id,
            "'" + doc.doc_id + "': non-finite value in " + std::string(role_name(r)) + " vectors");
      }
    }
  }
  for (const auto& rec : bank.records()) {
    if (!corpus_ids.contains(rec.doc_id)) {
      add(BankFinding::Kind::ExtraDocument, rec.doc_id, "'" + rec.doc_id + "': in bank but not in corpus");
    }
  }
  return report;
}

}  // namespace stack_order
