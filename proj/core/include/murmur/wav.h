#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace murmur {

struct WavAudio {
  std::vector<double> samples;  // channel 0, scaled to [-1, 1]
  int rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
};

// Reads a RIFF/WAVE file with integer PCM (8/16/24/32 bit) or 32-bit float
// payload. Integer samples are divided by 2^(bits-1); 8-bit data is unsigned
// and offset by 128 first. Only the first channel is returned.
WavAudio load_wav(const std::filesystem::path& path);
WavAudio decode_wav(std::span<const std::uint8_t> bytes);

enum class WavEncoding { kPcm16, kFloat32 };

// Writes mono audio. Pcm16 clips to [-1, 1) and rounds to nearest.
void save_wav(const std::filesystem::path& path, std::span<const double> samples, int rate,
              WavEncoding encoding = WavEncoding::kPcm16);
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int rate,
                                     WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace murmur
