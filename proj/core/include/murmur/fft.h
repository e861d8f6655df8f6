#pragma once

#include <complex>
#include <span>
#include <vector>

namespace murmur {

// In-place iterative radix-2 decimation-in-time FFT (forward, no scaling).
// Throws ArgumentError unless data.size() is a power of two.
void fft_inplace(std::span<std::complex<double>> data);

// Forward transform of a real sequence zero-padded to n (power of two);
// returns all n complex bins.
std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n);

bool is_power_of_two(std::size_t n);

}  // namespace murmur
