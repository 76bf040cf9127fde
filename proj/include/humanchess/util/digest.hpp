#pragma once

#include <cstdint>
#include <fstream>
#include <string>

namespace hc {

// FNV-1a over raw bytes; used for provenance input digests.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  uint64_t h = 0xcbf29ce484222325ULL;
  char chunk[65536];
  while (in.read(chunk, sizeof chunk) || in.gcount() > 0)
    h = fnv1a64(chunk, static_cast<size_t>(in.gcount()), h);
  return hex64(h);
}

}  // namespace hc
