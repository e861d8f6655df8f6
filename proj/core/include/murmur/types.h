#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace murmur {

// Every recording is brought to this rate before any further processing.
inline constexpr int kPoolRate = 2000;

enum class Label { kNormal = 0, kMurmur = 1 };
inline constexpr int kNumClasses = 2;

enum class Source { kD1, kD2, kD3, kSynthetic, kExternal };

std::string_view to_string(Label label);
std::string_view to_string(Source source);
// Accepts the lowercase names used in manifest files ("normal", "murmur").
std::optional<Label> parse_label(std::string_view text);
// Accepts "D1", "D2", "D3", "synthetic", "external" (case-insensitive).
std::optional<Source> parse_source(std::string_view text);

struct Recording {
  std::string id;
  std::vector<double> samples;
  int rate = kPoolRate;
  Label label = Label::kNormal;
  std::string subject;
  Source source = Source::kExternal;
  bool noisy = false;
};

// Throws ValidationError when the recording breaks a pool invariant
// (rate != 2000, empty, non-finite, empty subject).
void validate_pool_recording(const Recording& recording);

}  // namespace murmur
