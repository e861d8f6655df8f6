#include "murmur/types.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "murmur/error.h"

namespace murmur {

std::string_view to_string(Label label) {
  return label == Label::kMurmur ? "murmur" : "normal";
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kD1: return "D1";
    case Source::kD2: return "D2";
    case Source::kD3: return "D3";
    case Source::kSynthetic: return "synthetic";
    case Source::kExternal: return "external";
  }
  return "external";
}

namespace {
std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

std::optional<Label> parse_label(std::string_view text) {
  const auto t = lower(text);
  if (t == "normal") return Label::kNormal;
  if (t == "murmur") return Label::kMurmur;
  return std::nullopt;
}

std::optional<Source> parse_source(std::string_view text) {
  const auto t = lower(text);
  if (t == "d1") return Source::kD1;
  if (t == "d2") return Source::kD2;
  if (t == "d3") return Source::kD3;
  if (t == "synthetic") return Source::kSynthetic;
  if (t == "external") return Source::kExternal;
  return std::nullopt;
}

void validate_pool_recording(const Recording& recording) {
  if (recording.rate != kPoolRate)
    throw ValidationError("recording " + recording.id + " is not at 2000 Hz");
  if (recording.samples.empty())
    throw ValidationError("recording " + recording.id + " has no samples");
  if (recording.subject.empty())
    throw ValidationError("recording " + recording.id + " has no subject");
  if (!std::all_of(recording.samples.begin(), recording.samples.end(),
                   [](double v) { return std::isfinite(v); }))
    throw ValidationError("recording " + recording.id + " contains non-finite samples");
}

}  // namespace murmur
