#include "pdm/hash.hpp"

#include <cstdio>

#include "pdm/serialize.hpp"

namespace pdm {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(std::string_view bytes) { return hex_digest(fnv1a(bytes)); }

std::string file_hash(const std::filesystem::path& path) { return content_hash(read_text(path)); }

}  // namespace pdm
