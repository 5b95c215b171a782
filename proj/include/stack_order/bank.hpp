#pragma once

// EmbeddingBank: frozen per-document input vectors for every graph node.
// On disk this is the "STEB" container; see docs/formats.md for the byte
// layout. Values live in memory as doubles but are stored as float32, so a
// bank only round-trips exactly if its values are float-representable
// (quantize() guarantees that).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stack_order/corpus.hpp"
#include "stack_order/tensor.hpp"

namespace stack_order {

/// Node roles in the document graph; also the four vector kinds in a bank.
enum class NodeRole : std::uint8_t { Sentence = 0, Past = 1, Future = 2, Global = 3 };
inline constexpr std::array<NodeRole, 4> kAllRoles{NodeRole::Sentence, NodeRole::Past, NodeRole::Future,
                                                   NodeRole::Global};
std::string_view role_name(NodeRole r);

struct BankDims {
  std::uint32_t sentence = 0;
  std::uint32_t past = 0;
  std::uint32_t future = 0;
  std::uint32_t global = 0;

  std::uint32_t of(NodeRole r) const;
  friend bool operator==(const BankDims&, const BankDims&) = default;
};

/// Vectors for one document, one matrix per role with one row per vector.
struct BankRecord {
  std::string doc_id;
  std::array<Tensor, 4> vectors;  // indexed by NodeRole

  Tensor& of(NodeRole r) { return vectors[static_cast<std::size_t>(r)]; }
  const Tensor& of(NodeRole r) const { return vectors[static_cast<std::size_t>(r)]; }
  std::size_t count(NodeRole r) const { return of(r).rank() == 2 ? of(r).rows() : 0; }
  std::size_t total_vectors() const;

  friend bool operator==(const BankRecord&, const BankRecord&) = default;
};

class EmbeddingBank {
 public:
  EmbeddingBank() = default;
  explicit EmbeddingBank(BankDims dims) : dims_(dims) {}

  const BankDims& dims() const { return dims_; }
  const std::vector<BankRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Appends a record; widths must match dims() and doc_id must be new.
  void add(BankRecord record);
  const BankRecord* find(std::string_view doc_id) const;
  /// Like find() but throws an error naming the doc_id.
  const BankRecord& at(std::string_view doc_id) const;

  /// Round every value to float32 precision.
  void quantize();

  friend bool operator==(const EmbeddingBank& a, const EmbeddingBank& b) {
    return a.dims_ == b.dims_ && a.records_ == b.records_;
  }

 private:
  BankDims dims_;
  std::vector<BankRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::string_view kBankMagic = "STEB";
inline constexpr std::uint16_t kBankVersion = 1;

std::string serialize_bank(const EmbeddingBank& bank);
EmbeddingBank deserialize_bank(std::string_view bytes, std::string context = "bank");
void write_bank(const EmbeddingBank& bank, const std::string& path);
EmbeddingBank read_bank(const std::string& path);

struct BankFinding {
  enum class Kind { MissingDocument, ExtraDocument, CountMismatch, NonFinite };
  Kind kind;
  std::string doc_id;
  std::string message;
};

struct BankReport {
  std::vector<BankFinding> findings;
  bool ok() const { return findings.empty(); }
  std::string summary() const;
};

/// Cross-checks a bank against its corpus. Never throws on content problems;
/// everything found is listed in the report.
BankReport validate_bank(const Corpus& corpus, const EmbeddingBank& bank);

}  // namespace stack_order
