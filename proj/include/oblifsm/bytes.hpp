#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "oblifsm/errors.hpp"

namespace oblifsm {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline std::uint64_t field_mask(std::size_t width_bytes) {
  if (width_bytes == 0) return 0;
  if (width_bytes >= 8) return ~std::uint64_t{0};
  return (std::uint64_t{1} << (8 * width_bytes)) - 1;
}

inline std::uint64_t add_mod_field(std::uint64_t a, std::uint64_t b, std::size_t width_bytes) {
  return (a + b) & field_mask(width_bytes);
}

inline std::uint64_t sub_mod_field(std::uint64_t a, std::uint64_t b, std::size_t width_bytes) {
  return (a - b) & field_mask(width_bytes);
}

// Fixed-width big-endian integer fields. Values are expected to be pre-reduced
// to the field width; encode checks anyway.
inline void be_put(Bytes& out, std::uint64_t v, std::size_t width) {
  if (width < 8 && v > field_mask(width))
    fail(Errc::size_mismatch, "value does not fit a " + std::to_string(width) + "-byte field");
  for (std::size_t i = 0; i < width; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * (width - 1 - i))));
}

inline std::uint64_t be_get(ByteView in) {
  std::uint64_t v = 0;
  for (std::uint8_t b : in) v = (v << 8) | b;
  return v;
}

inline void xor_into(std::uint8_t* dst, const std::uint8_t* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

inline void xor_into(Bytes& dst, ByteView src) {
  if (dst.size() != src.size()) fail(Errc::size_mismatch, "xor operands differ in length");
  xor_into(dst.data(), src.data(), dst.size());
}

inline std::string to_hex(ByteView in) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(in.size() * 2);
  for (std::uint8_t b : in) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

inline Bytes from_hex(const std::string& s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) fail(Errc::parse, "odd-length hex string");
  Bytes out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]), lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) fail(Errc::parse, "non-hex character");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

// Bounds-checked sequential reader for wire payloads. Every decoder goes
// through this so that a flipped length byte surfaces as malformed-message,
// never as an out-of-range access.
class ByteReader {
 public:
  explicit ByteReader(ByteView buf) : buf_(buf) {}

  std::size_t remaining() const { return buf_.size() - pos_; }

  std::uint8_t read_u8() {
    need(1);
    return buf_[pos_++];
  }

  std::uint32_t read_u32() {
    need(4);
    std::uint32_t v = be_get(buf_.subspan(pos_, 4));
    pos_ += 4;
    return v;
  }

  // Count fields are validated against the bytes actually present before any
  // allocation happens (min_elem_bytes = smallest possible element encoding).
  std::uint32_t read_count(std::size_t min_elem_bytes, const char* what) {
    std::uint32_t c = read_u32();
    if (min_elem_bytes > 0 && c > remaining() / min_elem_bytes)
      fail(Errc::malformed_message, std::string("implausible count for ") + what);
    return c;
  }

  ByteView read_view(std::size_t n) {
    need(n);
    ByteView v = buf_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  Bytes read_bytes(std::size_t n) {
    ByteView v = read_view(n);
    return Bytes(v.begin(), v.end());
  }

  void expect_end() const {
    if (pos_ != buf_.size()) fail(Errc::malformed_message, "trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) fail(Errc::malformed_message, "payload truncated");
  }

  ByteView buf_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { be_put(out_, v, 4); }
  void raw(ByteView v) { out_.insert(out_.end(), v.begin(), v.end()); }
  void field(std::uint64_t v, std::size_t width) { be_put(out_, v, width); }

  Bytes take() { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  Bytes out_;
};

}  // namespace oblifsm
