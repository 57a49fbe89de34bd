#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common/error.hpp"

namespace facekey {

using Bytes = std::vector<std::uint8_t>;

// Little-endian binary writer shared by every on-disk and wire format.
class ByteWriter {
public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_le(bits, 8);
  }
  void raw(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void raw(std::string_view data) { out_.insert(out_.end(), data.begin(), data.end()); }
  // u16 length prefix, UTF-8 bytes.
  void str16(std::string_view s);
  // u32 length prefix.
  void blob32(std::span<const std::uint8_t> data) {
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
  }

  const Bytes& bytes() const& { return out_; }
  Bytes take() && { return std::move(out_); }

private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

// Reader over a byte span. Running off the end raises `on_truncation`.
class ByteReader {
public:
  explicit ByteReader(std::span<const std::uint8_t> data,
                      ErrorCode on_truncation = ErrorCode::StorageFailure)
      : data_(data), err_(on_truncation) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le(8)); }
  double f64() {
    std::uint64_t bits = get_le(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str16() {
    auto s = raw(u16());
    return {s.begin(), s.end()};
  }
  Bytes blob32() {
    auto s = raw(u32());
    return {s.begin(), s.end()};
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(err_, "truncated binary record");
  }
  std::uint64_t get_le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode err_;
};

inline void ByteWriter::str16(std::string_view s) {
  if (s.size() > 0xFFFF) fail(ErrorCode::InvalidArgument, "string exceeds u16 length prefix");
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s);
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Whole-file helpers. write_file_atomic writes to a sibling temp file and renames.
Bytes read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> data);
void append_file(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace facekey
