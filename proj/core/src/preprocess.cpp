#include "murmur/preprocess.h"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "binary_io.h"
#include "murmur/error.h"
#include "murmur/filter.h"

namespace murmur {

std::string Segment::id() const { return recording_id + "#" + std::to_string(index); }

std::vector<double> bandpass(std::span<const double> samples) {
  if (samples.empty()) throw ArgumentError("bandpass: empty input");
  static const SosFilter low = butterworth(kFilterOrder, kLowPassHz, kPoolRate, FilterType::kLowPass);
  static const SosFilter high = butterworth(kFilterOrder, kHighPassHz, kPoolRate, FilterType::kHighPass);
  constexpr std::size_t pad = 3 * kFilterOrder;
  if (samples.size() <= pad) throw ArgumentError("bandpass: input shorter than the edge padding");
  const auto lowpassed = filtfilt(low, samples, pad);
  return filtfilt(high, lowpassed, pad);
}

namespace {

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

}  // namespace

std::vector<double> remove_spikes(std::span<const double> samples) {
  std::vector<double> out(samples.begin(), samples.end());
  const std::size_t windows = out.size() / kSpikeWindow;
  if (windows == 0) return out;

  std::vector<double> maa(windows);
  auto window_max = [&](std::size_t w) {
    double m = 0.0;
    for (std::size_t i = w * kSpikeWindow; i < (w + 1) * kSpikeWindow; ++i) m = std::max(m, std::abs(out[i]));
    return m;
  };
  for (std::size_t w = 0; w < windows; ++w) maa[w] = window_max(w);

  while (true) {
    const auto worst = static_cast<std::size_t>(std::max_element(maa.begin(), maa.end()) - maa.begin());
    if (!(maa[worst] > kSpikeThreshold * median(maa))) break;

    const std::size_t begin = worst * kSpikeWindow;
    const std::size_t end = begin + kSpikeWindow;
    std::size_t peak = begin;
    for (std::size_t i = begin; i < end; ++i)
      if (std::abs(out[i]) > std::abs(out[peak])) peak = i;

    std::size_t lo = peak;
    while (lo > begin && !opposite_signs(out[lo - 1], out[lo])) --lo;
    std::size_t hi = peak;
    while (hi + 1 < end && !opposite_signs(out[hi], out[hi + 1])) ++hi;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(lo), out.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 0.0);
    maa[worst] = window_max(worst);
  }
  return out;
}

std::vector<Segment> segment(const Recording& recording) {
  if (recording.rate != kPoolRate) throw ArgumentError("segment: recording must be at 2000 Hz");
  std::vector<Segment> out;
  const auto& x = recording.samples;
  for (std::size_t start = 0, index = 0; start < x.size(); start += kSegmentLength, ++index) {
    const std::size_t available = std::min(kSegmentLength, x.size() - start);
    if (available < kMinResidualLength) break;
    Segment s;
    s.recording_id = recording.id;
    s.index = index;
    s.label = recording.label;
    s.subject = recording.subject;
    s.pad_len = kSegmentLength - available;
    s.samples.assign(kSegmentLength, 0.0);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(start), available, s.samples.begin());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Segment> preprocess(const Recording& recording) {
  Recording conditioned = recording;
  conditioned.samples = remove_spikes(bandpass(recording.samples));
  return segment(conditioned);
}

std::string segment_file_stem(const Segment& segment) {
  return segment.recording_id + "_" + std::to_string(segment.index);
}

void write_segment(const std::filesystem::path& dir, const Segment& segment) {
  if (segment.samples.size() != kSegmentLength) throw ArgumentError("write_segment: segment must hold 8000 samples");
  const auto stem = segment_file_stem(segment);
  detail::write_file(dir / (stem + ".f32"), detail::encode_f32(segment.samples));
  nlohmann::json meta = {{"recording_id", segment.recording_id},
                         {"index", segment.index},
                         {"label", to_string(segment.label)},
                         {"subject", segment.subject},
                         {"pad_len", segment.pad_len}};
  detail::write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
}

Segment read_segment(const std::filesystem::path& dir, const std::string& stem) {
  Segment s;
  try {
    const auto meta = nlohmann::json::parse(detail::read_text(dir / (stem + ".json")));
    s.recording_id = meta.at("recording_id").get<std::string>();
    s.index = meta.at("index").get<std::size_t>();
    const auto label = parse_label(meta.at("label").get<std::string>());
    if (!label) throw CorruptionError("segment sidecar has an unknown label");
    s.label = *label;
    s.subject = meta.at("subject").get<std::string>();
    s.pad_len = meta.at("pad_len").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("segment sidecar " + stem + ": " + e.what());
  }
  s.samples = detail::decode_f32(detail::read_file(dir / (stem + ".f32")));
  if (s.samples.size() != kSegmentLength) throw CorruptionError("segment payload " + stem + " is not 8000 samples");
  return s;
}

}  // namespace murmur
