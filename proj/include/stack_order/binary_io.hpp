#pragma once

// Little-endian primitive encoding shared by the bank and checkpoint
// formats. Independent of host byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stack_order::binary {

class Writer {
 public:
  void bytes(std::string_view b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  const std::string& buffer() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

/// Reads from a byte buffer; every failure names the byte offset.
class Reader {
 public:
  Reader(std::string_view data, std::string context) : data_(data), context_(std::move(context)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::string_view bytes(std::size_t n, std::string_view what) {
    need(n, what);
    std::string_view v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  std::uint8_t u8(std::string_view what) { return static_cast<std::uint8_t>(get(1, what)); }
  std::uint16_t u16(std::string_view what) { return static_cast<std::uint16_t>(get(2, what)); }
  std::uint32_t u32(std::string_view what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(std::string_view what) { return get(8, what); }
  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }
  double f64(std::string_view what) { return std::bit_cast<double>(u64(what)); }
  std::string str(std::string_view what) {
    const std::uint32_t n = u32(what);
    return std::string(bytes(n, what));
  }

  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }
  [[noreturn]] void fail_at(std::size_t offset, const std::string& message) const {
    throw std::runtime_error(context_ + ": " + message + " at byte offset " + std::to_string(offset));
  }

  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      fail("truncated " + std::string(what) + " (need " + std::to_string(n) + " bytes, " +
           std::to_string(remaining()) + " left)");
    }
  }

 private:
  std::uint64_t get(int n, std::string_view what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view data_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace stack_order::binary
