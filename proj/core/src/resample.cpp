#include "murmur/resample.h"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "murmur/error.h"

namespace murmur {
namespace {

constexpr double kCutoffFraction = 0.45;
constexpr double kZeroCrossings = 64.0;
constexpr double kKaiserBeta = 8.0;
constexpr std::int64_t kMaxTablePhases = 4096;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

class Kernel {
 public:
  Kernel(double src_rate, double dst_rate) {
    const double scale = std::min(1.0, dst_rate / src_rate);
    cutoff_ = kCutoffFraction * scale;  // cycles per input sample
    half_width_ = 0.5 * kZeroCrossings / scale;
    reach_ = static_cast<std::int64_t>(std::ceil(half_width_));
  }

  std::int64_t reach() const { return reach_; }

  // Taps for input offsets -reach+1 .. reach relative to floor(t), where
  // frac = t - floor(t). Normalized to unit DC gain.
  void taps(double frac, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(2 * reach_));
    double sum = 0.0;
    for (std::int64_t j = 0; j < 2 * reach_; ++j) {
      const double tau = frac - static_cast<double>(j - reach_ + 1);
      const double w = 2.0 * cutoff_ * sinc(2.0 * cutoff_ * tau) * kaiser(tau / half_width_, kKaiserBeta);
      out[static_cast<std::size_t>(j)] = w;
      sum += w;
    }
    if (sum != 0.0)
      for (auto& w : out) w /= sum;
  }

 private:
  double cutoff_ = 0.0;
  double half_width_ = 0.0;
  std::int64_t reach_ = 0;
};

double convolve_at(std::span<const double> x, std::int64_t base, std::int64_t reach,
                   const std::vector<double>& taps) {
  const auto n = static_cast<std::int64_t>(x.size());
  double acc = 0.0;
  for (std::int64_t j = 0; j < 2 * reach; ++j) {
    const std::int64_t k = base + j - reach + 1;
    if (k < 0 || k >= n) continue;
    acc += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
  }
  return acc;
}

}  // namespace

std::vector<double> resample(std::span<const double> samples, double src_rate, double dst_rate) {
  if (!(src_rate > 0.0) || !(dst_rate > 0.0)) throw ArgumentError("resample: rates must be positive");
  if (samples.empty()) throw ArgumentError("resample: empty input");
  if (src_rate == dst_rate) return {samples.begin(), samples.end()};

  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(samples.size()) * dst_rate / src_rate));
  std::vector<double> out(out_len);
  const Kernel kernel(src_rate, dst_rate);
  std::vector<double> taps;

  const bool integral = std::floor(src_rate) == src_rate && std::floor(dst_rate) == dst_rate;
  if (integral) {
    const auto src = static_cast<std::int64_t>(src_rate);
    const auto dst = static_cast<std::int64_t>(dst_rate);
    const std::int64_t g = std::gcd(src, dst);
    const std::int64_t up = dst / g;    // phases
    const std::int64_t down = src / g;  // input advance per `up` outputs
    if (up <= kMaxTablePhases) {
      std::vector<std::vector<double>> table(static_cast<std::size_t>(up));
      for (std::int64_t p = 0; p < up; ++p)
        kernel.taps(static_cast<double>(p) / static_cast<double>(up), table[static_cast<std::size_t>(p)]);
      for (std::size_t n = 0; n < out_len; ++n) {
        const std::int64_t pos = static_cast<std::int64_t>(n) * down;
        out[n] = convolve_at(samples, pos / up, kernel.reach(), table[static_cast<std::size_t>(pos % up)]);
      }
      return out;
    }
  }

  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) * src_rate / dst_rate;
    const double base = std::floor(t);
    kernel.taps(t - base, taps);
    out[n] = convolve_at(samples, static_cast<std::int64_t>(base), kernel.reach(), taps);
  }
  return out;
}

}  // namespace murmur
