#include "murmur/manifest.h"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "murmur/error.h"
#include "murmur/resample.h"
#include "murmur/wav.h"

namespace murmur {
namespace fs = std::filesystem;

std::string ManifestEntry::id() const { return fs::path(path).stem().string(); }

void Manifest::recount() {
  counts = {};
  for (const auto& e : entries) ++counts[static_cast<int>(e.label)];
}

void Manifest::validate() const {
  std::set<std::string> seen;
  std::array<std::size_t, kNumClasses> tally{};
  for (const auto& e : entries) {
    if (!seen.insert(e.path).second) throw ValidationError("duplicate manifest path: " + e.path);
    if (e.subject.empty()) throw ValidationError("manifest entry without subject: " + e.path);
    ++tally[static_cast<int>(e.label)];
  }
  if (tally != counts) throw ValidationError("manifest counts do not match entries");
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower_ext(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Physionet REFERENCE.csv: "<record>,<-1|1>" per line.
using ReferenceTable = std::map<std::string, int>;

const ReferenceTable& reference_for(const fs::path& dir, std::map<fs::path, ReferenceTable>& cache) {
  auto it = cache.find(dir);
  if (it != cache.end()) return it->second;
  ReferenceTable table;
  std::ifstream in(dir / "REFERENCE.csv");
  if (!in) throw ValidationError("reference rule but no REFERENCE.csv in " + dir.generic_string());
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("malformed REFERENCE.csv line: " + line);
    try {
      table[trim(line.substr(0, comma))] = std::stoi(trim(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ValidationError("malformed REFERENCE.csv line: " + line);
    }
  }
  return cache.emplace(dir, std::move(table)).first->second;
}

}  // namespace

std::vector<ManifestRule> parse_rules(std::istream& in) {
  std::vector<ManifestRule> rules;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string pattern, label, source, noisy;
    if (!(fields >> pattern)) continue;
    const auto where = "rules line " + std::to_string(line_no) + ": ";
    if (!(fields >> label >> source)) throw ValidationError(where + "expected <glob> <label> <source> [noisy]");
    ManifestRule rule;
    rule.pattern = pattern;
    if (label == "reference") {
      rule.label = LabelRule::kReference;
    } else if (auto l = parse_label(label)) {
      rule.label = *l == Label::kMurmur ? LabelRule::kMurmur : LabelRule::kNormal;
    } else {
      throw ValidationError(where + "unknown label '" + label + "'");
    }
    auto s = parse_source(source);
    if (!s) throw ValidationError(where + "unknown source '" + source + "'");
    rule.source = *s;
    if (fields >> noisy) {
      if (noisy != "0" && noisy != "1") throw ValidationError(where + "noisy must be 0 or 1");
      rule.noisy = noisy == "1";
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ManifestRule> load_rules(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rules file " + path.string());
  return parse_rules(in);
}

Manifest build_manifest(const fs::path& root, const std::vector<ManifestRule>& rules) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.string());

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && lower_ext(it->path()) == ".wav") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });

  Manifest manifest;
  std::map<fs::path, ReferenceTable> references;
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, root).generic_string();
    const auto rule = std::find_if(rules.begin(), rules.end(), [&](const ManifestRule& r) {
      return fnmatch(r.pattern.c_str(), rel.c_str(), 0) == 0;
    });
    if (rule == rules.end()) continue;

    ManifestEntry entry;
    entry.path = (root / rel).generic_string();
    entry.subject = file.stem().string();
    entry.source = rule->source;
    entry.noisy = rule->noisy;
    switch (rule->label) {
      case LabelRule::kNormal: entry.label = Label::kNormal; break;
      case LabelRule::kMurmur: entry.label = Label::kMurmur; break;
      case LabelRule::kReference: {
        const auto& table = reference_for(file.parent_path(), references);
        const auto ref = table.find(entry.subject);
        if (ref == table.end()) throw ValidationError("no REFERENCE.csv row for " + rel);
        if (ref->second != -1) continue;  // abnormal: no murmur sub-label available
        entry.label = Label::kNormal;
        break;
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw ValidationError("no recordings matched");
  manifest.recount();
  manifest.validate();
  return manifest;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  out << "path,label,subject,source,noisy\n";
  for (const auto& e : manifest.entries) {
    if (e.path.find_first_of(",\n\"") != std::string::npos || e.subject.find_first_of(",\n\"") != std::string::npos)
      throw ValidationError("manifest fields may not contain commas, quotes, or newlines: " + e.path);
    out << e.path << ',' << to_string(e.label) << ',' << e.subject << ',' << to_string(e.source) << ','
        << (e.noisy ? 1 : 0) << '\n';
  }
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  write_manifest(out, manifest);
  if (!out) throw IoError("cannot write " + path.string());
}

Manifest read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "path,label,subject,source,noisy")
    throw ValidationError("manifest header must be path,label,subject,source,noisy");
  Manifest manifest;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    const auto where = "manifest line " + std::to_string(line_no) + ": ";
    if (cols.size() != 5) throw ValidationError(where + "expected 5 columns");
    ManifestEntry e;
    e.path = cols[0];
    auto label = parse_label(cols[1]);
    if (!label) throw ValidationError(where + "bad label '" + cols[1] + "'");
    e.label = *label;
    e.subject = cols[2];
    auto source = parse_source(cols[3]);
    if (!source) throw ValidationError(where + "bad source '" + cols[3] + "'");
    e.source = *source;
    if (cols[4] != "0" && cols[4] != "1") throw ValidationError(where + "noisy must be 0 or 1");
    e.noisy = cols[4] == "1";
    manifest.entries.push_back(std::move(e));
  }
  manifest.recount();
  manifest.validate();
  return manifest;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return read_manifest(in);
}

Recording load_recording(const ManifestEntry& entry) {
  const auto audio = load_wav(entry.path);
  Recording r;
  r.id = entry.id();
  r.samples = resample(audio.samples, audio.rate, kPoolRate);
  r.rate = kPoolRate;
  r.label = entry.label;
  r.subject = entry.subject;
  r.source = entry.source;
  r.noisy = entry.noisy;
  validate_pool_recording(r);
  return r;
}

}  // namespace murmur
