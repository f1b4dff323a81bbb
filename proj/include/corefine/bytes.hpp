#pragma once

// Little-endian byte packing shared by the canonical signature encoding, the
// wire format and the slice files. Fixed-width integers, length-prefixed
// variable payloads.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "corefine/errors.hpp"

namespace corefine {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) { le(v, 2); }
  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void i64(int64_t v) { le(static_cast<uint64_t>(v), 8); }
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  // u32 length prefix + bytes
  void blob(const void* p, size_t n) {
    u32(static_cast<uint32_t>(n));
    raw(p, n);
  }
  void str(const std::string& s) { blob(s.data(), s.size()); }
  size_t size() const { return out_.size(); }
  std::vector<uint8_t>& buffer() { return out_; }

 private:
  void le(uint64_t v, int nbytes) {
    for (int i = 0; i < nbytes; i++) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  std::vector<uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* p, size_t n) : p_(p), end_(p + n) {}
  explicit ByteReader(const std::vector<uint8_t>& v) : ByteReader(v.data(), v.size()) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { return static_cast<uint16_t>(le(2)); }
  uint32_t u32() { return static_cast<uint32_t>(le(4)); }
  uint64_t u64() { return le(8); }
  int64_t i64() { return static_cast<int64_t>(le(8)); }
  std::vector<uint8_t> blob() {
    uint32_t n = u32();
    const uint8_t* b = take(n);
    return std::vector<uint8_t>(b, b + n);
  }
  std::string str() {
    uint32_t n = u32();
    const uint8_t* b = take(n);
    return std::string(reinterpret_cast<const char*>(b), n);
  }
  bool done() const { return p_ == end_; }
  size_t remaining() const { return static_cast<size_t>(end_ - p_); }

 private:
  const uint8_t* take(size_t n) {
    if (remaining() < n) throw ProtocolError("truncated binary payload");
    const uint8_t* r = p_;
    p_ += n;
    return r;
  }
  uint64_t le(int nbytes) {
    const uint8_t* b = take(nbytes);
    uint64_t v = 0;
    for (int i = 0; i < nbytes; i++) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  const uint8_t* p_;
  const uint8_t* end_;
};

}  // namespace corefine
