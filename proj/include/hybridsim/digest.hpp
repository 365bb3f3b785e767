// Content fingerprints for the run manifest: FNV-1a 64-bit over the raw
// bytes. Not cryptographic; the determinism checks only compare digests
// for equality.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hybridsim {

inline std::uint64_t fnv1a64(const char* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct FileDigest {
  std::uint64_t value = 0;
  std::uint64_t bytes = 0;
  std::string hex() const { return to_hex(value); }
};

inline FileDigest digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("digest_file: cannot open " + path);
  FileDigest d;
  d.value = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    if (got > 0) {
      d.value = fnv1a64(buf, static_cast<std::size_t>(got), d.value);
      d.bytes += static_cast<std::uint64_t>(got);
    }
  }
  return d;
}

}  // namespace hybridsim
