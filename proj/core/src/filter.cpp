#include "murmur/filter.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "murmur/error.h"

namespace murmur {

SosFilter butterworth(int order, double cutoff_hz, double rate_hz, FilterType type) {
  if (order <= 0 || order % 2 != 0) throw ArgumentError("butterworth: order must be positive and even");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0))
    throw ArgumentError("butterworth: cutoff must lie in (0, Nyquist)");

  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  SosFilter sos;
  for (int k = 1; k <= order / 2; ++k) {
    // Pole-pair quality factors of the analog Butterworth prototype.
    const double q = 1.0 / (2.0 * std::sin((2 * k - 1) * std::numbers::pi / (2.0 * order)));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    if (type == FilterType::kLowPass) {
      s.b = {(1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0};
    } else {
      s.b = {(1.0 + cw) / 2.0, -(1.0 + cw), (1.0 + cw) / 2.0};
    }
    for (auto& v : s.b) v /= a0;
    s.a = {-2.0 * cw / a0, (1.0 - alpha) / a0};
    sos.push_back(s);
  }
  return sos;
}

std::vector<double> sos_filter(const SosFilter& sos, std::span<const double> x,
                               std::span<const std::array<double, 2>> initial) {
  if (!initial.empty() && initial.size() != sos.size())
    throw ArgumentError("sos_filter: initial state count must match section count");
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& sec = sos[s];
    double z1 = initial.empty() ? 0.0 : initial[s][0];
    double z2 = initial.empty() ? 0.0 : initial[s][1];
    for (auto& v : y) {
      const double in = v;
      const double out = sec.b[0] * in + z1;
      z1 = sec.b[1] * in - sec.a[0] * out + z2;
      z2 = sec.b[2] * in - sec.a[1] * out;
      v = out;
    }
  }
  return y;
}

std::vector<std::array<double, 2>> sos_step_state(const SosFilter& sos) {
  std::vector<std::array<double, 2>> state;
  double level = 1.0;  // steady-state input level reaching this section
  for (const auto& sec : sos) {
    const double out = sec.gain_at_dc() * level;
    const double z2 = sec.b[2] * level - sec.a[1] * out;
    const double z1 = sec.b[1] * level - sec.a[0] * out + z2;
    state.push_back({z1, z2});
    level = out;
  }
  return state;
}

std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n <= pad) throw ArgumentError("filtfilt: input too short for edge padding");

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto unit = sos_step_state(sos);
  auto scaled = [&](double level) {
    auto zi = unit;
    for (auto& z : zi) {
      z[0] *= level;
      z[1] *= level;
    }
    return zi;
  };

  auto y = sos_filter(sos, ext, scaled(ext.front()));
  std::reverse(y.begin(), y.end());
  y = sos_filter(sos, y, scaled(y.front()));
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.end() - static_cast<std::ptrdiff_t>(pad)};
}

}  // namespace murmur
