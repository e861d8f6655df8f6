#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "murmur/error.h"

namespace murmur::detail {

// Explicit little-endian encoding, independent of host byte order.
template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t raw;
  std::memcpy(&raw, &f, sizeof raw);
  put_le(out, raw);
}

inline float get_f32(const std::uint8_t* p) {
  const auto raw = get_le<std::uint32_t>(p);
  float f;
  std::memcpy(&f, &raw, sizeof f);
  return f;
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t raw;
  std::memcpy(&raw, &d, sizeof raw);
  put_le(out, raw);
}

inline double get_f64(const std::uint8_t* p) {
  const auto raw = get_le<std::uint64_t>(p);
  double d;
  std::memcpy(&d, &raw, sizeof d);
  return d;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

inline std::vector<std::uint8_t> encode_f32(std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (double v : values) put_f32(out, static_cast<float>(v));
  return out;
}

inline std::vector<double> decode_f32(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) throw CorruptionError("float32 payload length is not a multiple of 4");
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_f32(bytes.data() + 4 * i);
  return out;
}

}  // namespace murmur::detail
