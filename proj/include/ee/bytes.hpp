#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ee {

// Canonical little-endian encoding used for state serialization, the binary
// ring store, and output hashing.  Keep everything explicit so the bytes are
// identical across platforms.

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, 8);
  put_u64(out, b);
}

inline void put_bytes(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s.data(), s.size());
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view buf) : p_(buf.data()), end_(buf.data() + buf.size()) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(*p_++)) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(*p_++)) << (8 * i);
    return v;
  }

  double f64() {
    std::uint64_t b = u64();
    double x;
    std::memcpy(&x, &b, 8);
    return x;
  }

  std::string_view bytes() {
    std::uint32_t n = u32();
    need(n);
    std::string_view s(p_, n);
    p_ += n;
    return s;
  }

  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw std::runtime_error("byte stream truncated");
  }
  const char* p_;
  const char* end_;
};

// CSV cells carry 6 significant digits throughout the tooling.
inline void append_csv_number(std::string& out, double x) {
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%.6g", x);
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ee
