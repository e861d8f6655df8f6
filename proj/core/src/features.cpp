#include "murmur/features.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "murmur/error.h"
#include "murmur/fft.h"

namespace murmur {

std::vector<std::vector<double>> frame(std::span<const double> samples, std::size_t frame_len, std::size_t step) {
  if (step < 1) throw ArgumentError("frame: step must be at least 1");
  if (frame_len == 0 || frame_len > samples.size()) throw ArgumentError("frame: frame length exceeds input");
  const std::size_t count = (samples.size() - frame_len) / step + 1;
  std::vector<std::vector<double>> frames(count);
  for (std::size_t i = 0; i < count; ++i)
    frames[i].assign(samples.begin() + static_cast<std::ptrdiff_t>(i * step),
                     samples.begin() + static_cast<std::ptrdiff_t>(i * step + frame_len));
  return frames;
}

std::vector<double> hamming(std::size_t length) {
  if (length == 1) return {1.0};
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length - 1));
  return w;
}

std::vector<double> periodogram(std::span<const double> frame, std::size_t dft_len) {
  if (frame.size() > dft_len) throw ArgumentError("periodogram: frame longer than DFT length");
  const auto spectrum = fft_real(frame, dft_len);
  std::vector<double> power(dft_len / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]) / static_cast<double>(dft_len);
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelFilterbank::apply(std::span<const double> power) const {
  if (power.size() != n_bins) throw ArgumentError("mel filterbank: power spectrum has wrong length");
  std::vector<double> energies(n_filters, 0.0);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const auto w = row(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * power[k];
    energies[m] = acc;
  }
  return energies;
}

MelFilterbank build_mel_filterbank(std::size_t n_filters, double f_low, double f_high, std::size_t dft_len,
                                   double rate) {
  if (n_filters == 0) throw ArgumentError("mel filterbank: need at least one filter");
  if (!(f_low >= 0.0) || !(f_low < f_high)) throw ArgumentError("mel filterbank: need 0 <= f_low < f_high");
  if (f_high > rate / 2.0) throw ArgumentError("mel filterbank: f_high exceeds Nyquist");

  const double mel_low = hz_to_mel(f_low);
  const double mel_step = (hz_to_mel(f_high) - mel_low) / static_cast<double>(n_filters + 1);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = mel_to_hz(mel_low + mel_step * static_cast<double>(i));
  edges.back() = f_high;

  MelFilterbank bank;
  bank.n_filters = n_filters;
  bank.n_bins = dft_len / 2 + 1;
  bank.weights.assign(bank.n_filters * bank.n_bins, 0.0);
  const double bin_hz = rate / static_cast<double>(dft_len);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    bank.centers_hz.push_back(center);
    for (std::size_t k = 0; k < bank.n_bins; ++k) {
      const double f = bin_hz * static_cast<double>(k);
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      bank.weights[m * bank.n_bins + k] = w;
    }
  }
  return bank;
}

std::vector<double> dct_ii(std::span<const double> x, std::size_t n_out) {
  const std::size_t n = x.size();
  if (n == 0 || n_out > n) throw ArgumentError("dct_ii: invalid lengths");
  std::vector<double> out(n_out);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                             (2.0 * static_cast<double>(n)));
    out[k] = (k == 0 ? s0 : sk) * acc;
  }
  return out;
}

namespace {

void require_segment_length(std::span<const double> samples) {
  if (samples.size() != kSegmentLength) throw ArgumentError("features: segment must hold exactly 8000 samples");
}

}  // namespace

SpectrogramFeature spectrogram(std::span<const double> samples) {
  require_segment_length(samples);
  static const auto window = hamming(kSpecFrameLength);
  const auto frames = frame(samples, kSpecFrameLength, kSpecStep);

  SpectrogramFeature out;
  out.grid = {kSpecBins, frames.size(), std::vector<double>(kSpecBins * frames.size())};
  std::vector<double> windowed(kSpecFrameLength);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t n = 0; n < kSpecFrameLength; ++n) windowed[n] = frames[t][n] * window[n];
    const auto spectrum = fft_real(windowed, kSpecFrameLength);
    for (std::size_t b = 0; b < kSpecBins; ++b) {
      const double power = std::norm(spectrum[2 * b]) / static_cast<double>(kSpecFrameLength);
      out.grid.at(b, t) = std::log(power + kLogFloor);
    }
  }
  return out;
}

SpectrogramFeature spectrogram(const Segment& segment) { return spectrogram(segment.samples); }

CepstrogramFeature mfcc(std::span<const double> samples) {
  require_segment_length(samples);
  static const auto window = hamming(kMfccFrameLength);
  static const auto bank = build_mel_filterbank();
  const auto frames = frame(samples, kMfccFrameLength, kMfccStep);

  CepstrogramFeature out;
  out.grid = {kCepstralCoefficients, frames.size(), std::vector<double>(kCepstralCoefficients * frames.size())};
  std::vector<double> windowed(kMfccFrameLength);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t n = 0; n < kMfccFrameLength; ++n) windowed[n] = frames[t][n] * window[n];
    auto energies = bank.apply(periodogram(windowed, kMfccDftLength));
    for (auto& e : energies) e = std::log(std::max(e, kLogFloor));
    const auto coeffs = dct_ii(energies, kCepstralCoefficients);
    for (std::size_t c = 0; c < kCepstralCoefficients; ++c) out.grid.at(c, t) = coeffs[c];
  }
  return out;
}

CepstrogramFeature mfcc(const Segment& segment) { return mfcc(segment.samples); }

}  // namespace murmur
