#pragma once

#include <array>
#include <span>
#include <vector>

namespace murmur {

// One biquad in transposed direct form II, a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2

  double gain_at_dc() const { return (b[0] + b[1] + b[2]) / (1.0 + a[0] + a[1]); }
};

using SosFilter = std::vector<Biquad>;

enum class FilterType { kLowPass, kHighPass };

// Digital Butterworth filter of even order as cascaded biquads (bilinear
// transform with frequency prewarping).
SosFilter butterworth(int order, double cutoff_hz, double rate_hz, FilterType type);

// Causal filtering with optional per-section initial state.
std::vector<double> sos_filter(const SosFilter& sos, std::span<const double> x,
                               std::span<const std::array<double, 2>> initial = {});

// Steady-state section states for a unit step input (scaled by the first
// sample before use), as used for transient-free zero-phase filtering.
std::vector<std::array<double, 2>> sos_step_state(const SosFilter& sos);

// Forward-backward (zero-phase) filtering. The signal is extended at both
// ends by odd reflection of `pad` samples; sections start in steady state.
// Throws ArgumentError when x.size() <= pad.
std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t pad);

}  // namespace murmur
