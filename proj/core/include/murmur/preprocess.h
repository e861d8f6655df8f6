#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "murmur/types.h"

namespace murmur {

inline constexpr std::size_t kSegmentLength = 4 * kPoolRate;     // 4 s
inline constexpr std::size_t kMinResidualLength = 2 * kPoolRate;  // 2 s
inline constexpr double kLowPassHz = 500.0;
inline constexpr double kHighPassHz = 25.0;
inline constexpr int kFilterOrder = 4;
inline constexpr std::size_t kSpikeWindow = kPoolRate / 2;  // 500 ms
inline constexpr double kSpikeThreshold = 3.0;

struct Segment {
  std::string recording_id;
  std::size_t index = 0;  // position within the recording
  std::vector<double> samples;  // exactly kSegmentLength
  Label label = Label::kNormal;
  std::string subject;
  std::size_t pad_len = 0;  // trailing zeros appended

  std::string id() const;  // "<recording_id>#<index>"
};

// 500 Hz low-pass then 25 Hz high-pass, each a 4th-order Butterworth applied
// forward and backward. Input at 2000 Hz.
std::vector<double> bandpass(std::span<const double> samples);

// Iterative spike excision over 500 ms windows: while the largest window
// maximum exceeds 3x the median window maximum, the lobe around the largest
// sample in that window (delimited by its neighbouring zero-crossings within
// the window) is set to zero. Samples after the last full window are never
// modified.
std::vector<double> remove_spikes(std::span<const double> samples);

// Non-overlapping 4 s chunks. A final residual of at least 2 s is zero
// padded; shorter residuals are dropped.
std::vector<Segment> segment(const Recording& recording);

// bandpass -> remove_spikes -> segment.
std::vector<Segment> preprocess(const Recording& recording);

// Segment cache: <dir>/<stem>.f32 (8000 little-endian float32) and
// <dir>/<stem>.json {recording_id, index, label, subject, pad_len}.
void write_segment(const std::filesystem::path& dir, const Segment& segment);
Segment read_segment(const std::filesystem::path& dir, const std::string& stem);
std::string segment_file_stem(const Segment& segment);

}  // namespace murmur
