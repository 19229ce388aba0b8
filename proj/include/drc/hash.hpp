#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace drc {

/// 64-bit FNV-1a, rendered as 16 hex digits. Stable across platforms and
/// runs, unlike std::hash.
inline std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace drc
