#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "seq2bf/error.hpp"

namespace seq2bf::binio {

// Little-endian primitives shared by the stats and checkpoint containers.

template <class UInt>
void put_le(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(UInt));
}

template <class UInt>
UInt get_le(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) throw FormatError("unexpected end of file");
  UInt value = 0;
  for (size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline void put_u32(std::ostream& out, uint32_t v) { put_le(out, v); }
inline void put_u64(std::ostream& out, uint64_t v) { put_le(out, v); }
inline uint32_t get_u32(std::istream& in) { return get_le<uint32_t>(in); }
inline uint64_t get_u64(std::istream& in) { return get_le<uint64_t>(in); }

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, size_t max_len = size_t{1} << 30) {
  const uint32_t len = get_u32(in);
  if (len > max_len) throw FormatError("string length out of range");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw FormatError("unexpected end of file");
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace seq2bf::binio
