#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "murmur/types.h"

namespace murmur {

struct ManifestEntry {
  std::string path;
  Label label = Label::kNormal;
  std::string subject;
  Source source = Source::kExternal;
  bool noisy = false;

  // Recording identifier: the file stem.
  std::string id() const;
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::array<std::size_t, kNumClasses> counts{};  // indexed by Label

  std::size_t count(Label label) const { return counts[static_cast<int>(label)]; }
  void recount();
  // Unique paths, nonempty subjects, counts matching the entries.
  void validate() const;
};

// How a rule assigns a label to the files it matches.
enum class LabelRule {
  kNormal,
  kMurmur,
  // Look the file stem up in a Physionet-style REFERENCE.csv next to the file:
  // "-1" is normal, "1" is abnormal and the file is discarded.
  kReference,
};

struct ManifestRule {
  std::string pattern;  // fnmatch glob over the path relative to the root
  LabelRule label = LabelRule::kNormal;
  Source source = Source::kExternal;
  bool noisy = false;
};

// One rule per non-comment line, whitespace separated:
//   <glob> <normal|murmur|reference> <source> [noisy 0|1]
// The first matching rule wins; files matching no rule are ignored.
std::vector<ManifestRule> parse_rules(std::istream& in);
std::vector<ManifestRule> load_rules(const std::filesystem::path& path);

// Walks root for *.wav files, applies rules, and returns entries sorted by
// path. Paths are stored as root/relative in generic form.
// Throws ValidationError("no recordings matched") when nothing matches.
Manifest build_manifest(const std::filesystem::path& root,
                        const std::vector<ManifestRule>& rules);

// CSV with header path,label,subject,source,noisy and LF line endings.
void write_manifest(std::ostream& out, const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);

// Loads the entry's audio, resamples it to the pool rate, and checks pool
// invariants.
Recording load_recording(const ManifestEntry& entry);

}  // namespace murmur
