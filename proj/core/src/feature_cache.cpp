#include "murmur/feature_cache.h"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "binary_io.h"
#include "murmur/error.h"
#include "murmur/hash.h"
#include "murmur/resample.h"
#include "murmur/wav.h"

namespace murmur {
namespace fs = std::filesystem;

namespace {

// Bumped whenever preprocessing or feature definitions change.
constexpr int kPipelineVersion = 1;

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::string entry_stem(const SegmentInfo& info) { return info.recording_id + "_" + std::to_string(info.index); }

}  // namespace

void FeatureSet::add(SegmentInfo info, const SpectrogramFeature& spec, const CepstrogramFeature& ceps) {
  add_raw(std::move(info), to_float(spec.grid.values), to_float(ceps.grid.values));
}

void FeatureSet::add_raw(SegmentInfo info, std::span<const float> spec, std::span<const float> ceps) {
  if (spec.size() != kSpecSize || ceps.size() != kCepsSize)
    throw ShapeError("feature set: spectrogram must be 65x61 and cepstrogram 13x398");
  info_.push_back(std::move(info));
  spec_.insert(spec_.end(), spec.begin(), spec.end());
  ceps_.insert(ceps_.end(), ceps.begin(), ceps.end());
}

nn::Tensor FeatureSet::spec_batch(std::span<const std::size_t> rows) const {
  nn::Tensor out({rows.size(), 1, kSpecBins, kSpecFrames});
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto src = spec(rows[n]);
    std::copy(src.begin(), src.end(), out.data() + n * kSpecSize);
  }
  return out;
}

nn::Tensor FeatureSet::ceps_batch(std::span<const std::size_t> rows) const {
  nn::Tensor out({rows.size(), kMfccFrames, kCepstralCoefficients});
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto src = ceps(rows[n]);
    double* dst = out.data() + n * kCepsSize;
    for (std::size_t c = 0; c < kCepstralCoefficients; ++c)
      for (std::size_t t = 0; t < kMfccFrames; ++t) dst[t * kCepstralCoefficients + c] = src[c * kMfccFrames + t];
  }
  return out;
}

FeatureSet featurize(std::span<const Segment> segments) {
  FeatureSet set;
  for (const auto& s : segments) {
    SegmentInfo info{s.id(), s.recording_id, s.index, s.label, s.subject, s.pad_len};
    set.add(std::move(info), spectrogram(s), mfcc(s));
  }
  return set;
}

void write_feature_entry(const fs::path& dir, const SegmentInfo& info, const SpectrogramFeature& spec,
                         const CepstrogramFeature& ceps) {
  const auto stem = entry_stem(info);
  detail::write_file(dir / (stem + ".spec.f32"), detail::encode_f32(spec.grid.values));
  detail::write_file(dir / (stem + ".ceps.f32"), detail::encode_f32(ceps.grid.values));
  const nlohmann::json meta = {
      {"segment_id", info.segment_id},
      {"recording_id", info.recording_id},
      {"index", info.index},
      {"label", to_string(info.label)},
      {"subject", info.subject},
      {"pad_len", info.pad_len},
      {"shapes", {{"spectrogram", {kSpecBins, kSpecFrames}}, {"cepstrogram", {kCepstralCoefficients, kMfccFrames}}}}};
  detail::write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
}

namespace {

SegmentInfo read_entry_info(const fs::path& dir, const std::string& stem) {
  try {
    const auto meta = nlohmann::json::parse(detail::read_text(dir / (stem + ".json")));
    SegmentInfo info;
    info.segment_id = meta.at("segment_id").get<std::string>();
    info.recording_id = meta.at("recording_id").get<std::string>();
    info.index = meta.at("index").get<std::size_t>();
    const auto label = parse_label(meta.at("label").get<std::string>());
    if (!label) throw CorruptionError("feature sidecar " + stem + " has an unknown label");
    info.label = *label;
    info.subject = meta.at("subject").get<std::string>();
    info.pad_len = meta.at("pad_len").get<std::size_t>();
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("feature sidecar " + stem + ": " + e.what());
  }
}

std::vector<float> read_f32(const fs::path& path, std::size_t expected) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() != expected * 4) throw CorruptionError("feature payload " + path.string() + " has wrong size");
  std::vector<float> out(expected);
  for (std::size_t i = 0; i < expected; ++i) out[i] = detail::get_f32(bytes.data() + 4 * i);
  return out;
}

struct RecordingIndex {
  std::string recording_id;
  std::string source_hash;
  std::vector<std::string> segments;  // entry stems
};

std::optional<RecordingIndex> read_index(const fs::path& file) {
  std::error_code ec;
  if (!fs::exists(file, ec)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(detail::read_text(file));
    if (j.value("version", 0) != kPipelineVersion) return std::nullopt;
    return RecordingIndex{j.at("recording_id").get<std::string>(), j.at("source_hash").get<std::string>(),
                          j.at("segments").get<std::vector<std::string>>()};
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void write_index(const fs::path& dir, const RecordingIndex& index) {
  const nlohmann::json j = {{"version", kPipelineVersion},
                            {"recording_id", index.recording_id},
                            {"source_hash", index.source_hash},
                            {"segments", index.segments}};
  detail::write_text(dir / (index.recording_id + ".rec.json"), j.dump(2) + "\n");
}

}  // namespace

FeatureSet load_feature_cache(const fs::path& dir) {
  std::vector<fs::path> indexes;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const auto name = e.path().filename().string();
    if (name.size() > 9 && name.ends_with(".rec.json")) indexes.push_back(e.path());
  }
  if (ec) throw IoError("cannot read feature cache " + dir.string() + ": " + ec.message());
  if (indexes.empty()) throw IoError("feature cache " + dir.string() + " is empty");
  std::sort(indexes.begin(), indexes.end());

  FeatureSet set;
  for (const auto& file : indexes) {
    auto index = read_index(file);
    if (!index) throw CorruptionError("unreadable cache index " + file.string());
    for (const auto& stem : index->segments) {
      auto info = read_entry_info(dir, stem);
      set.add_raw(std::move(info), read_f32(dir / (stem + ".spec.f32"), FeatureSet::kSpecSize),
                  read_f32(dir / (stem + ".ceps.f32"), FeatureSet::kCepsSize));
    }
  }
  return set;
}

FeaturizeStats featurize_manifest(const Manifest& manifest, const fs::path& dir, unsigned jobs) {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries)
    if (!ids.insert(e.id()).second) throw ValidationError("duplicate recording id in manifest: " + e.id());
  fs::create_directories(dir);

  FeaturizeStats stats;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::vector<std::size_t> seg_count(manifest.entries.size(), 0);
  std::vector<std::array<std::size_t, kNumClasses>> class_count(manifest.entries.size());

  auto work = [&] {
    for (std::size_t k = next++; k < manifest.entries.size(); k = next++) {
      const auto& entry = manifest.entries[k];
      try {
        const auto bytes = detail::read_file(entry.path);
        Fnv1a64 h;
        h.update(bytes);
        h.update(std::string(to_string(entry.label)) + "|" + entry.subject);
        const auto hash = h.hex();
        const auto index_file = dir / (entry.id() + ".rec.json");
        if (auto existing = read_index(index_file); existing && existing->source_hash == hash) {
          std::lock_guard lock(mu);
          ++stats.skipped;
          seg_count[k] = existing->segments.size();
          class_count[k][static_cast<int>(entry.label)] = existing->segments.size();
          continue;
        }

        const auto audio = decode_wav(bytes);
        Recording rec;
        rec.id = entry.id();
        rec.samples = resample(audio.samples, audio.rate, kPoolRate);
        rec.label = entry.label;
        rec.subject = entry.subject;
        rec.source = entry.source;
        rec.noisy = entry.noisy;
        validate_pool_recording(rec);

        RecordingIndex index{rec.id, hash, {}};
        for (const auto& seg : preprocess(rec)) {
          SegmentInfo info{seg.id(), seg.recording_id, seg.index, seg.label, seg.subject, seg.pad_len};
          write_feature_entry(dir, info, spectrogram(seg), mfcc(seg));
          index.segments.push_back(entry_stem(info));
        }
        write_index(dir, index);
        std::lock_guard lock(mu);
        ++stats.computed;
        seg_count[k] = index.segments.size();
        class_count[k][static_cast<int>(entry.label)] = index.segments.size();
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        ++stats.failed;
        stats.errors.push_back(entry.path + ": " + e.what());
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(manifest.entries.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(stats.errors.begin(), stats.errors.end());
  for (std::size_t k = 0; k < seg_count.size(); ++k) {
    stats.segments += seg_count[k];
    for (int c = 0; c < kNumClasses; ++c) stats.segment_counts[static_cast<std::size_t>(c)] += class_count[k][static_cast<std::size_t>(c)];
  }
  return stats;
}

}  // namespace murmur
