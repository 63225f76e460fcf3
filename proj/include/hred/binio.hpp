#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hred/corpus.hpp"  // fnv1a64

// Little-endian binary IO with a running FNV-1a digest, shared by the
// checkpoint and index serializers. Files end with the 8-byte digest of
// everything before it.

namespace hred::binio {

class HashingWriter {
 public:
  explicit HashingWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* data, std::size_t len) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    hash_ = fnv1a64(data, len, hash_);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  // writes the digest itself (not hashed) as the trailer
  void finish() {
    const std::uint64_t digest = hash_;
    os_.write(reinterpret_cast<const char*>(&digest), 8);
  }
  std::uint64_t hash() const { return hash_; }

 private:
  std::ostream& os_;
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

class HashingReader {
 public:
  HashingReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  void bytes(void* data, std::size_t len) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!is_) throw std::runtime_error(source_ + ": truncated or unreadable file");
    hash_ = fnv1a64(data, len, hash_);
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  std::int64_t i64() { std::int64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    const std::uint64_t len = u64();
    std::string s(len, '\0');
    if (len > 0) bytes(s.data(), len);
    return s;
  }
  // reads and verifies the digest trailer
  void finish() {
    const std::uint64_t expected = hash_;
    std::uint64_t stored = 0;
    is_.read(reinterpret_cast<char*>(&stored), 8);
    if (!is_) throw std::runtime_error(source_ + ": truncated checksum");
    if (stored != expected) {
      throw std::runtime_error(source_ + ": checksum mismatch (stored " + to_hex(stored) +
                               ", computed " + to_hex(expected) + ")");
    }
  }
  std::uint64_t hash() const { return hash_; }
  const std::string& source() const { return source_; }

  static std::string to_hex(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(value));
    return buf;
  }

 private:
  std::istream& is_;
  std::string source_;
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

inline std::string to_hex(std::uint64_t value) { return HashingReader::to_hex(value); }

// Opens a binary file and checks its 8-byte magic tag.
inline void expect_magic(HashingReader& r, const char (&magic)[9]) {
  char found[8];
  r.bytes(found, 8);
  for (int i = 0; i < 8; ++i) {
    if (found[i] != magic[i]) {
      throw std::runtime_error(r.source() + ": wrong file type (expected " +
                               std::string(magic, 8) + ")");
    }
  }
}

}  // namespace hred::binio
