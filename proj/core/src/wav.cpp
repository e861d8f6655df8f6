#include "murmur/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "murmur/error.h"

namespace murmur {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

double decode_sample(const std::uint8_t* p, int bits, bool is_float) {
  if (is_float) {
    std::uint32_t raw = read_u32(p);
    float f;
    std::memcpy(&f, &raw, sizeof f);
    return static_cast<double>(f);
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
  }
  throw FormatError("unsupported bit depth " + std::to_string(bits));
}

}  // namespace

WavAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file");

  WavAudio audio;
  bool have_fmt = false;
  int block_align = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) throw FormatError("truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      std::uint16_t format = read_u16(f);
      audio.channels = read_u16(f + 2);
      audio.rate = static_cast<int>(read_u32(f + 4));
      block_align = read_u16(f + 12);
      audio.bits_per_sample = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40 || available < 40) throw FormatError("truncated extensible fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      if (format == kFormatPcm) {
        audio.is_float = false;
      } else if (format == kFormatFloat) {
        audio.is_float = true;
        if (audio.bits_per_sample != 32) throw FormatError("only 32-bit float WAV is supported");
      } else {
        throw FormatError("non-PCM WAV format tag " + std::to_string(format));
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, available);
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (!data) throw FormatError("missing data chunk");
  if (audio.channels <= 0 || audio.rate <= 0) throw FormatError("invalid channel count or rate");
  const int bits = audio.bits_per_sample;
  if (!audio.is_float && bits != 8 && bits != 16 && bits != 24 && bits != 32)
    throw FormatError("unsupported bit depth " + std::to_string(bits));
  const int sample_bytes = bits / 8;
  if (block_align < sample_bytes * audio.channels) block_align = sample_bytes * audio.channels;

  const std::size_t frames = data_size / static_cast<std::size_t>(block_align);
  if (frames == 0) throw FormatError("zero-length audio");
  audio.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i)
    audio.samples[i] = decode_sample(data + i * block_align, bits, audio.is_float);
  return audio;
}

WavAudio load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int rate,
                                     WavEncoding encoding) {
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * (bits / 8));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(rate));
  put_u32(out, static_cast<std::uint32_t>(rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (double s : samples) {
    if (is_float) {
      float f = static_cast<float>(s);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    } else {
      double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      scaled = std::clamp(scaled, -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
  }
  return out;
}

void save_wav(const std::filesystem::path& path, std::span<const double> samples, int rate,
              WavEncoding encoding) {
  const auto bytes = encode_wav(samples, rate, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace murmur
