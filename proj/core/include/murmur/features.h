#pragma once

#include <span>
#include <vector>

#include "murmur/preprocess.h"

namespace murmur {

// Spectrogram: 256-sample (128 ms) frames, 128-sample (64 ms) hop,
// Hamming(256), 256-point FFT, even bins 0..128 kept.
inline constexpr std::size_t kSpecFrameLength = 256;
inline constexpr std::size_t kSpecStep = 128;
inline constexpr std::size_t kSpecBins = 65;
inline constexpr std::size_t kSpecFrames = 61;

// Cepstrogram: 50-sample (25 ms) frames, 20-sample (10 ms) hop, Hamming(50),
// 128-point periodogram, 26 mel filters over 70-500 Hz, 13 DCT-II coefficients.
inline constexpr std::size_t kMfccFrameLength = 50;
inline constexpr std::size_t kMfccStep = 20;
inline constexpr std::size_t kMfccDftLength = 128;
inline constexpr std::size_t kMelFilters = 26;
inline constexpr double kMelLowHz = 70.0;
inline constexpr double kMelHighHz = 500.0;
inline constexpr std::size_t kCepstralCoefficients = 13;
inline constexpr std::size_t kMfccFrames = 398;

inline constexpr double kLogFloor = 1e-10;

// Row-major [rows x cols] grid of log-domain values.
struct FeatureGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

// 65 frequency bins x 61 frames; bins are 15.625 Hz apart.
struct SpectrogramFeature {
  FeatureGrid grid;
  static constexpr double kBinHz = 15.625;
  static constexpr double kFrameStepSeconds = 0.064;
};

// 13 coefficients x 398 frames.
struct CepstrogramFeature {
  FeatureGrid grid;
  static constexpr double kFrameStepSeconds = 0.010;
};

struct MelFilterbank {
  std::size_t n_filters = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;  // row-major [n_filters x n_bins]
  std::vector<double> centers_hz;

  std::span<const double> row(std::size_t m) const { return {weights.data() + m * n_bins, n_bins}; }
  std::vector<double> apply(std::span<const double> power) const;
};

// frame count = floor((N - frame_len) / step) + 1; no padding.
std::vector<std::vector<double>> frame(std::span<const double> samples, std::size_t frame_len, std::size_t step);

// w[n] = 0.54 - 0.46 cos(2 pi n / (L - 1)).
std::vector<double> hamming(std::size_t length);

// |DFT(k)|^2 / dft_len for k = 0..dft_len/2 of the zero-padded frame.
std::vector<double> periodogram(std::span<const double> frame, std::size_t dft_len);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangles between n_filters + 2 mel-spaced edge frequencies, evaluated at
// the DFT bin centre frequencies k * rate / dft_len.
MelFilterbank build_mel_filterbank(std::size_t n_filters = kMelFilters, double f_low = kMelLowHz,
                                   double f_high = kMelHighHz, std::size_t dft_len = kMfccDftLength,
                                   double rate = kPoolRate);

// Orthonormal DCT-II, first n_out coefficients.
std::vector<double> dct_ii(std::span<const double> x, std::size_t n_out);

SpectrogramFeature spectrogram(std::span<const double> samples);
SpectrogramFeature spectrogram(const Segment& segment);
CepstrogramFeature mfcc(std::span<const double> samples);
CepstrogramFeature mfcc(const Segment& segment);

}  // namespace murmur
