#include "murmur/nn/checkpoint.h"

#include <cstring>

#include "../binary_io.h"
#include "murmur/error.h"
#include "murmur/hash.h"

namespace murmur::nn {

namespace {
constexpr char kMagic[8] = {'M', 'U', 'R', 'M', 'U', 'R', 'C', 'K'};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw CorruptionError("checkpoint is truncated");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() { return murmur::detail::get_le<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return murmur::detail::get_le<std::uint64_t>(take(8)); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedArray> arrays) {
  using murmur::detail::put_le;
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.insert(out.end(), a.name.begin(), a.name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.tensor.ndim()));
    for (auto d : a.tensor.shape()) put_le<std::uint64_t>(out, d);
    for (double v : a.tensor.span()) murmur::detail::put_f64(out, v);
  }
  put_le<std::uint64_t>(out, fnv1a64(out));
  return out;
}

std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 + 4 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw CorruptionError("not a murmur checkpoint");
  const auto body = bytes.first(bytes.size() - 8);
  if (murmur::detail::get_le<std::uint64_t>(bytes.data() + body.size()) != fnv1a64(body))
    throw CorruptionError("checkpoint checksum mismatch");

  Reader r(body);
  r.take(8);
  if (const auto version = r.u32(); version != kCheckpointVersion)
    throw CorruptionError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<NamedArray> arrays;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    const std::uint32_t name_len = r.u32();
    const auto* name = r.take(name_len);
    a.name.assign(reinterpret_cast<const char*>(name), name_len);
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) throw CorruptionError("checkpoint array has implausible rank");
    Shape shape(ndim);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d != 0 && n > body.size() / d) throw CorruptionError("checkpoint array extent overflow");
      n *= d;
    }
    if (n > body.size() / 8) throw CorruptionError("checkpoint is truncated");
    std::vector<double> values(n);
    const auto* raw = r.take(8 * n);
    for (std::size_t i = 0; i < n; ++i) values[i] = murmur::detail::get_f64(raw + 8 * i);
    a.tensor = Tensor(std::move(shape), std::move(values));
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedArray> arrays) {
  murmur::detail::write_file(path, encode_checkpoint(arrays));
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(murmur::detail::read_file(path));
}

}  // namespace murmur::nn
