#include "murmur/synth.h"

#include <cmath>
#include <numbers>
#include <random>

#include "murmur/error.h"
#include "murmur/filter.h"

namespace murmur {

namespace {

constexpr double kRate = kPoolRate;

// a * exp(-(t-c)^2 / (2 sigma^2)) * sin(2 pi f (t-c) + phase), sigma = dur/4,
// truncated at +-4 sigma.
void add_burst(std::vector<double>& x, double center, double dur, double freq, double amp, double phase) {
  const double sigma = dur / 4.0;
  const auto lo = static_cast<long>(std::ceil((center - 4 * sigma) * kRate));
  const auto hi = static_cast<long>(std::floor((center + 4 * sigma) * kRate));
  for (long n = std::max(0L, lo); n <= hi && n < static_cast<long>(x.size()); ++n) {
    const double t = n / kRate - center;
    x[static_cast<std::size_t>(n)] +=
        amp * std::exp(-t * t / (2 * sigma * sigma)) * std::sin(2 * std::numbers::pi * freq * t + phase);
  }
}

// Tukey window value at position u in [0, 1] with taper fraction alpha.
double tukey(double u, double alpha) {
  if (u < 0.0 || u > 1.0) return 0.0;
  const double edge = alpha / 2.0;
  if (u < edge) return 0.5 * (1 - std::cos(std::numbers::pi * u / edge));
  if (u > 1.0 - edge) return 0.5 * (1 - std::cos(std::numbers::pi * (1.0 - u) / edge));
  return 1.0;
}

}  // namespace

Recording synth_pcg(Label label, double duration_s, std::uint64_t seed) {
  if (!(duration_s >= 2.0)) throw ArgumentError("synth_pcg: duration must be at least 2 s");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const auto n = static_cast<std::size_t>(std::llround(duration_s * kRate));
  const double period = 60.0 / uniform(60.0, 100.0);
  const double systole = uniform(0.28, 0.34);
  const double f1 = uniform(30.0, 80.0), f2 = uniform(50.0, 120.0);
  const double d1 = uniform(0.05, 0.10), d2 = uniform(0.05, 0.10);
  const double a2 = uniform(0.6, 0.9);
  const double murmur_rms = uniform(0.2, 0.5);
  const double first_beat = uniform(0.05, period);

  std::vector<double> heart(n, 0.0);
  std::vector<std::pair<double, double>> systoles;
  for (double t0 = first_beat; t0 < duration_s; t0 += period) {
    add_burst(heart, t0, d1, f1, uniform(0.9, 1.1), uniform(0.0, 2 * std::numbers::pi));
    add_burst(heart, t0 + systole, d2, f2, a2 * uniform(0.9, 1.1), uniform(0.0, 2 * std::numbers::pi));
    systoles.emplace_back(t0, t0 + systole);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  if (label == Label::kMurmur) {
    std::vector<double> noise(n);
    for (auto& v : noise) v = gauss(rng);
    const auto lp = butterworth(4, 600.0, kRate, FilterType::kLowPass);
    const auto hp = butterworth(4, 150.0, kRate, FilterType::kHighPass);
    noise = filtfilt(hp, filtfilt(lp, noise, 12), 12);
    double power = 0.0;
    for (double v : noise) power += v * v;
    const double gain = murmur_rms / std::sqrt(power / static_cast<double>(n));
    for (const auto& [start, stop] : systoles)
      for (std::size_t i = static_cast<std::size_t>(std::max(0.0, std::ceil(start * kRate)));
           i < n && i / kRate <= stop; ++i)
        heart[i] += gain * noise[i] * tukey((i / kRate - start) / (stop - start), 0.25);
  }

  double power = 0.0;
  for (double v : heart) power += v * v;
  const double noise_sd = std::sqrt(power / static_cast<double>(n) / 100.0);  // 20 dB
  for (auto& v : heart) v += noise_sd * gauss(rng);

  Recording rec;
  rec.id = "synth_" + std::string(to_string(label)) + "_" + std::to_string(seed);
  rec.samples = std::move(heart);
  rec.rate = kPoolRate;
  rec.label = label;
  rec.subject = rec.id;
  rec.source = Source::kSynthetic;
  return rec;
}

}  // namespace murmur
