#include "murmur/hash.h"

#include <cstdio>

namespace murmur {

void Fnv1a64::update(std::span<const std::uint8_t> bytes) {
  for (auto b : bytes) {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a64::update(std::string_view text) {
  update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string Fnv1a64::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

}  // namespace murmur
