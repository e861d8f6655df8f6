#include "murmur/fft.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "murmur/error.h"

namespace murmur {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw ArgumentError("fft: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const double theta = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by recurrence to keep
      // round-off at machine precision.
      const std::complex<double> w(std::cos(theta * static_cast<double>(k)), std::sin(theta * static_cast<double>(k)));
      for (std::size_t start = 0; start < n; start += len) {
        auto& a = data[start + k];
        auto& b = data[start + k + half];
        const auto t = w * b;
        b = a - t;
        a += t;
      }
    }
  }
}

std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n) {
  if (x.size() > n) throw ArgumentError("fft_real: input longer than transform length");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft_inplace(buf);
  return buf;
}

}  // namespace murmur
