// Command-line driver: manifest, featurize, train, evaluate, predict, synth.
//
// Exit codes: 0 success, 2 input or validation error, 3 corruption or
// internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "murmur/cross_validate.h"
#include "murmur/error.h"
#include "murmur/feature_cache.h"
#include "murmur/manifest.h"
#include "murmur/model.h"
#include "murmur/resample.h"
#include "murmur/synth.h"
#include "murmur/wav.h"

namespace fs = std::filesystem;
using namespace murmur;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

struct RunConfig {
  fs::path out = "out";
  fs::path cache;  // defaults to <out>/cache
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double l2_lambda = 1e-4;
  double keep_prob = 0.8;
  std::size_t folds = 5;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  std::vector<std::string> modes{"full"};
  // synth
  std::size_t n_normal = 100;
  std::size_t n_murmur = 100;
  double duration = 4.0;

  fs::path cache_dir() const { return cache.empty() ? out / "cache" : cache; }

  void validate() const {
    if (jobs == 0) throw ConfigError("jobs must be positive");
    if (folds < 2) throw ConfigError("folds must be at least 2");
    if (modes.empty()) throw ConfigError("at least one mode is required");
    for (const auto& m : modes)
      if (!parse_model_mode(m)) throw ConfigError("unknown mode '" + m + "' (full, cnn-only, bilstm-only)");
    train_config(ModelMode::kFull).validate();
  }

  TrainConfig train_config(ModelMode mode) const {
    TrainConfig t;
    t.mode = mode;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.lr = lr;
    t.l2_lambda = l2_lambda;
    t.keep_prob = keep_prob;
    t.seed = seed;
    t.patience = patience;
    t.min_delta = min_delta;
    return t;
  }
};

// Bad files, flags or data; anything else (corruption, numeric failure,
// broken internal invariants) is exit 3.
bool is_input_error(const Error& e) {
  return dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
         dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
         dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigError*>(&e);
}

void info(const std::string& line) { std::cerr << line << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string counts_line(std::size_t normal, std::size_t murmur) {
  return "normal " + std::to_string(normal) + ", murmur " + std::to_string(murmur);
}

int cmd_manifest(const RunConfig& rc, const fs::path& root, const fs::path& rules_path) {
  const auto manifest = build_manifest(root, load_rules(rules_path));
  const auto path = rc.out / "manifest.csv";
  fs::create_directories(rc.out);
  save_manifest(path, manifest);
  std::cout << "wrote " << path.string() << ": " << manifest.entries.size() << " recordings ("
            << counts_line(manifest.count(Label::kNormal), manifest.count(Label::kMurmur)) << ")\n";
  return kExitOk;
}

int cmd_featurize(const RunConfig& rc, const fs::path& manifest_path) {
  const auto manifest = load_manifest(manifest_path);
  const auto stats = featurize_manifest(manifest, rc.cache_dir(), rc.jobs);
  for (const auto& e : stats.errors) info("skipped " + e);
  std::cout << stats.computed << " computed, " << stats.skipped << " skipped, " << stats.failed << " failed\n";
  std::cout << "segments: " << stats.segments << " ("
            << counts_line(stats.segment_counts[0], stats.segment_counts[1]) << ")\n";
  if (!manifest.entries.empty() && stats.failed == manifest.entries.size()) {
    info("every recording failed");
    return kExitInput;
  }
  return kExitOk;
}

int cmd_train(const RunConfig& rc) {
  const auto features = load_feature_cache(rc.cache_dir());
  info("loaded " + std::to_string(features.size()) + " segments from " + rc.cache_dir().string());

  std::vector<MetricsReport> reports;
  nlohmann::json logs = nlohmann::json::object();
  nlohmann::json plan_json;
  for (const auto& name : rc.modes) {
    const auto mode = *parse_model_mode(name);
    CvConfig cv;
    cv.train = rc.train_config(mode);
    cv.folds = rc.folds;
    cv.jobs = rc.jobs;
    info("training " + std::string(display_name(mode)));
    auto result = cross_validate(features, cv, [&](std::string_view line) { info("  " + std::string(line)); });

    const auto ckpt_dir = rc.out / "checkpoints" / name;
    fs::create_directories(ckpt_dir);
    nlohmann::json mode_logs = nlohmann::json::array();
    for (std::size_t f = 0; f < result.models.size(); ++f) {
      result.models[f].save(ckpt_dir / ("fold" + std::to_string(f + 1) + ".ckpt"));
      nlohmann::json epochs = nlohmann::json::array();
      for (const auto& e : result.folds[f].log)
        epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}, {"steps", e.steps}});
      mode_logs.push_back({{"fold", f + 1},
                           {"train_size", result.folds[f].train_size},
                           {"test_size", result.folds[f].test_size},
                           {"early_stopped", result.folds[f].early_stopped},
                           {"epochs", epochs}});
    }
    logs[name] = mode_logs;
    plan_json = result.plan.to_json();
    reports.push_back(std::move(result.report));
  }

  nlohmann::json report_json = {{"config", rc.train_config(ModelMode::kFull).to_json()}, {"folds", rc.folds}};
  report_json["config"].erase("mode");
  report_json["reports"] = nlohmann::json::array();
  for (const auto& r : reports) report_json["reports"].push_back(r.to_json());
  const auto table = format_table(reports);

  write_text(rc.out / "report.json", report_json.dump(2) + "\n");
  write_text(rc.out / "report.txt", table);
  write_text(rc.out / "folds.json", plan_json.dump(2) + "\n");
  write_text(rc.out / "train_log.json", logs.dump(2) + "\n");
  std::cout << table;
  return kExitOk;
}

int cmd_evaluate(const RunConfig& rc, const fs::path& report_path, const fs::path& checkpoint) {
  if (!checkpoint.empty()) {
    auto model = Model::load(checkpoint);
    const auto features = load_feature_cache(rc.cache_dir());
    std::vector<std::size_t> rows(features.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto m = evaluate(model, features, rows);
    const auto report = MetricsReport::from_folds(model.config().mode, {m});
    std::cout << format_table(std::span(&report, 1));
    const auto& c = m.confusion;
    std::cout << "confusion: tp_n " << c.tp_n << ", fn_n " << c.fn_n << ", fp_m " << c.fp_m << ", tn_m " << c.tn_m
              << "\n";
    return kExitOk;
  }
  const auto path = report_path.empty() ? rc.out / "report.json" : report_path;
  const auto j = read_json(path);
  std::vector<MetricsReport> reports;
  try {
    for (const auto& r : j.at("reports")) reports.push_back(MetricsReport::from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::cout << format_table(reports);
  for (const auto& r : reports) {
    std::cout << display_name(r.mode) << " per fold:\n";
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      const auto& m = r.folds[f];
      const auto show = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
      };
      std::cout << "  fold " << f + 1 << ": sensitivity " << show(m.sensitivity) << ", specificity "
                << show(m.specificity) << ", f1 " << show(m.f1_normal) << ", accuracy " << show(m.accuracy) << "\n";
    }
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_predict(const fs::path& wav_path, const fs::path& checkpoint) {
  auto model = Model::load(checkpoint);
  const auto audio = load_wav(wav_path);
  Recording rec;
  rec.id = wav_path.stem().string();
  rec.subject = rec.id;
  rec.samples = resample(audio.samples, audio.rate, kPoolRate);
  validate_pool_recording(rec);
  const auto segments = preprocess(rec);
  if (segments.empty()) throw ValidationError("recording is shorter than 2 s; no segments to classify");
  const auto features = featurize(segments);
  std::vector<std::size_t> rows(features.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto p = predict_proba(model, features, rows);

  std::size_t votes[2] = {0, 0};
  double mean_murmur = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "segment %zu: P(normal) %.6f, P(murmur) %.6f\n", i, p[2 * i], p[2 * i + 1]);
    std::cout << buf;
    ++votes[p[2 * i + 1] > p[2 * i] ? 1 : 0];
    mean_murmur += p[2 * i + 1] / static_cast<double>(rows.size());
  }
  // Majority vote over segments; a tie goes to the mean probability.
  const bool murmur = votes[1] != votes[0] ? votes[1] > votes[0] : mean_murmur > 0.5;
  std::cout << "recording: " << (murmur ? "murmur" : "normal") << " (" << votes[0] << " normal, " << votes[1]
            << " murmur segments)\n";
  return kExitOk;
}

int cmd_synth(const RunConfig& rc) {
  Manifest manifest;
  const auto dir = rc.out / "synth";
  std::uint64_t seed = rc.seed;
  for (const auto& [label, count] : {std::pair{Label::kNormal, rc.n_normal}, std::pair{Label::kMurmur, rc.n_murmur}}) {
    fs::create_directories(dir / std::string(to_string(label)));
    for (std::size_t i = 0; i < count; ++i, ++seed) {
      const auto rec = synth_pcg(label, rc.duration, seed);
      const auto path = dir / std::string(to_string(label)) / (rec.id + ".wav");
      save_wav(path, rec.samples, rec.rate, WavEncoding::kFloat32);
      manifest.entries.push_back({path.generic_string(), label, rec.subject, Source::kSynthetic, false});
    }
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  manifest.recount();
  save_manifest(rc.out / "manifest.csv", manifest);
  std::cout << "wrote " << manifest.entries.size() << " synthetic recordings ("
            << counts_line(manifest.count(Label::kNormal), manifest.count(Label::kMurmur)) << ") and "
            << (rc.out / "manifest.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart-murmur detection from phonocardiogram recordings"};
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file; command-line flags override it");

  RunConfig rc;
  app.add_option("--out", rc.out, "Output directory");
  app.add_option("--cache", rc.cache, "Feature cache directory (default <out>/cache)");
  app.add_option("--seed", rc.seed, "Run seed");
  app.add_option("--jobs", rc.jobs, "Worker threads (featurize: recordings, train: folds)");
  app.add_option("--epochs", rc.epochs, "Maximum training epochs");
  app.add_option("--batch-size", rc.batch_size, "Mini-batch size");
  app.add_option("--lr", rc.lr, "Adam learning rate");
  app.add_option("--l2-lambda", rc.l2_lambda, "L2 coefficient on CNN weights");
  app.add_option("--keep-prob", rc.keep_prob, "Dropout keep probability");
  app.add_option("--folds", rc.folds, "Cross-validation folds");
  app.add_option("--patience", rc.patience, "Early-stop patience in epochs (0 disables)");
  app.add_option("--min-delta", rc.min_delta, "Minimum epoch-loss improvement that resets patience");
  app.add_option("--mode", rc.modes, "Models to train: full, cnn-only, bilstm-only (comma separated)")->delimiter(',');
  app.add_option("--normal", rc.n_normal, "synth: normal recordings");
  app.add_option("--murmur", rc.n_murmur, "synth: murmur recordings");
  app.add_option("--duration", rc.duration, "synth: recording length in seconds");

  fs::path root, rules, manifest_path, report_path, checkpoint, wav;
  auto* manifest_cmd = app.add_subcommand("manifest", "Catalog a recording tree into <out>/manifest.csv");
  manifest_cmd->add_option("--root", root, "Dataset root directory")->required();
  manifest_cmd->add_option("--rules", rules, "Labeling rules file")->required();

  auto* featurize_cmd = app.add_subcommand("featurize", "Preprocess and featurize every manifest entry");
  featurize_cmd->add_option("--manifest", manifest_path, "Manifest CSV (default <out>/manifest.csv)");

  auto* train_cmd = app.add_subcommand("train", "Patient-disjoint cross-validation; writes reports and checkpoints");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Print a saved report, or score a checkpoint on the cache");
  evaluate_cmd->add_option("--report", report_path, "Report JSON (default <out>/report.json)");
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Score this checkpoint on every cached segment");

  auto* predict_cmd = app.add_subcommand("predict", "Per-segment class probabilities for one WAV file");
  predict_cmd->add_option("wav", wav, "Input WAV (any rate)")->required();
  predict_cmd->add_option("checkpoint", checkpoint, "Model checkpoint")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled corpus and its manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    rc.validate();
    if (*manifest_cmd) return cmd_manifest(rc, root, rules);
    if (*featurize_cmd) return cmd_featurize(rc, manifest_path.empty() ? rc.out / "manifest.csv" : manifest_path);
    if (*train_cmd) return cmd_train(rc);
    if (*evaluate_cmd) return cmd_evaluate(rc, report_path, checkpoint);
    if (*predict_cmd) return cmd_predict(wav, checkpoint);
    if (*synth_cmd) return cmd_synth(rc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e) ? kExitInput : kExitInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
