#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "murmur/nn/tensor.h"

namespace murmur::nn {

struct NamedArray {
  std::string name;
  Tensor tensor;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all little-endian):
//   "MURMURCK" | u32 version | u32 array count
//   per array: u32 name length | name bytes | u32 ndim | u64 extents[ndim] |
//              f64 values[prod(extents)] (row-major)
//   u64 FNV-1a of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedArray> arrays);
// Throws CorruptionError on bad magic, version, truncation, or checksum.
std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedArray> arrays);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

}  // namespace murmur::nn
