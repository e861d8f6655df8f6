#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace murmur {

// 64-bit FNV-1a. Used for cache freshness and checkpoint integrity; not
// cryptographic.
class Fnv1a64 {
 public:
  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace murmur
