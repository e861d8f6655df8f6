#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "murmur/features.h"
#include "murmur/manifest.h"
#include "murmur/nn/tensor.h"

namespace murmur {

struct SegmentInfo {
  std::string segment_id;  // "<recording_id>#<index>"
  std::string recording_id;
  std::size_t index = 0;
  Label label = Label::kNormal;
  std::string subject;
  std::size_t pad_len = 0;
};

// In-memory feature table, single precision, one row per segment.
class FeatureSet {
 public:
  static constexpr std::size_t kSpecSize = kSpecBins * kSpecFrames;
  static constexpr std::size_t kCepsSize = kCepstralCoefficients * kMfccFrames;

  void add(SegmentInfo info, const SpectrogramFeature& spec, const CepstrogramFeature& ceps);
  void add_raw(SegmentInfo info, std::span<const float> spec, std::span<const float> ceps);

  std::size_t size() const { return info_.size(); }
  const SegmentInfo& info(std::size_t i) const { return info_[i]; }
  const std::vector<SegmentInfo>& infos() const { return info_; }
  std::span<const float> spec(std::size_t i) const { return {spec_.data() + i * kSpecSize, kSpecSize}; }
  std::span<const float> ceps(std::size_t i) const { return {ceps_.data() + i * kCepsSize, kCepsSize}; }

  // [B x 1 x 65 x 61]
  nn::Tensor spec_batch(std::span<const std::size_t> rows) const;
  // [B x 398 x 13]: the 13 x 398 grid transposed to frames-first.
  nn::Tensor ceps_batch(std::span<const std::size_t> rows) const;

 private:
  std::vector<SegmentInfo> info_;
  std::vector<float> spec_;
  std::vector<float> ceps_;
};

// Segments -> features, in order.
FeatureSet featurize(std::span<const Segment> segments);

// Feature cache, per segment:
//   <stem>.spec.f32  row-major 65 x 61 little-endian float32
//   <stem>.ceps.f32  row-major 13 x 398 little-endian float32
//   <stem>.json      {segment_id, recording_id, index, label, subject, pad_len, shapes}
// and per recording <recording_id>.rec.json {recording_id, source_hash, segments}
// used for freshness checks.
void write_feature_entry(const std::filesystem::path& dir, const SegmentInfo& info, const SpectrogramFeature& spec,
                         const CepstrogramFeature& ceps);
// Loads every segment listed by the recording indexes in dir, ordered by
// recording id then segment index. Throws IoError if dir has no index.
FeatureSet load_feature_cache(const std::filesystem::path& dir);

struct FeaturizeStats {
  std::size_t computed = 0;  // recordings processed
  std::size_t skipped = 0;   // recordings with a fresh cache entry
  std::size_t failed = 0;    // unreadable recordings
  std::size_t segments = 0;  // segments now present for the manifest
  std::array<std::size_t, kNumClasses> segment_counts{};
  std::vector<std::string> errors;
};

// Loads, preprocesses, segments and featurizes every manifest entry into dir.
// Recordings whose source bytes hash matches the existing index are skipped.
// Recording ids (file stems) must be unique.
FeaturizeStats featurize_manifest(const Manifest& manifest, const std::filesystem::path& dir, unsigned jobs = 1);

}  // namespace murmur
