#include "murmur/metrics.h"

#include <cmath>
#include <cstdio>

#include "murmur/error.h"

namespace murmur {

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::kNormal)
    ++(predicted == Label::kNormal ? tp_n : fn_n);
  else
    ++(predicted == Label::kNormal ? fp_m : tn_m);
}

Confusion confusion_of(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("confusion_of: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i], predicted[i]);
  return c;
}

FoldMetrics FoldMetrics::from_confusion(const Confusion& c) {
  FoldMetrics m;
  m.confusion = c;
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.sensitivity = ratio(c.tp_n, c.normals());
  m.specificity = ratio(c.tn_m, c.murmurs());
  if (c.normals() > 0) m.f1_normal = ratio(2 * c.tp_n, 2 * c.tp_n + c.fp_m + c.fn_n);
  m.accuracy = ratio(c.tp_n + c.tn_m, c.total());
  return m;
}

Aggregate aggregate(std::span<const std::optional<double>> values) {
  Aggregate a;
  double sum = 0.0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++a.defined;
    }
  if (a.defined == 0) return a;
  const double mean = sum / static_cast<double>(a.defined);
  double ss = 0.0;
  for (const auto& v : values)
    if (v) ss += (*v - mean) * (*v - mean);
  a.mean = mean;
  a.std = std::sqrt(ss / static_cast<double>(a.defined));
  return a;
}

MetricsReport MetricsReport::from_folds(ModelMode mode, std::vector<FoldMetrics> folds) {
  MetricsReport r;
  r.mode = mode;
  r.folds = std::move(folds);
  const auto column = [&](auto member, const char* name) {
    std::vector<std::optional<double>> v;
    for (const auto& f : r.folds) v.push_back(f.*member);
    auto agg = aggregate(v);
    if (agg.defined < v.size())
      r.warnings.push_back(std::string(name) + " undefined in " + std::to_string(v.size() - agg.defined) +
                           " fold(s); excluded from the aggregate");
    return agg;
  };
  r.sensitivity = column(&FoldMetrics::sensitivity, "sensitivity");
  r.specificity = column(&FoldMetrics::specificity, "specificity");
  r.f1_normal = column(&FoldMetrics::f1_normal, "f1_normal");
  r.accuracy = column(&FoldMetrics::accuracy, "accuracy");
  return r;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("n/a"); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "n/a") return std::nullopt;
  throw FormatError("metrics report: metric must be a number or \"n/a\"");
}

nlohmann::json agg_json(const Aggregate& a) { return {{"mean", opt(a.mean)}, {"std", opt(a.std)}, {"folds", a.defined}}; }

Aggregate agg_from(const nlohmann::json& j) {
  return {opt_from(j.at("mean")), opt_from(j.at("std")), j.at("folds").get<std::size_t>()};
}

std::string cell(const Aggregate& a) {
  if (!a.mean) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", *a.mean, *a.std);
  return buf;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) {
    const auto& c = f.confusion;
    folds_json.push_back({{"sensitivity", opt(f.sensitivity)},
                          {"specificity", opt(f.specificity)},
                          {"f1_normal", opt(f.f1_normal)},
                          {"accuracy", opt(f.accuracy)},
                          {"confusion", {{"tp_n", c.tp_n}, {"fn_n", c.fn_n}, {"fp_m", c.fp_m}, {"tn_m", c.tn_m}}}});
  }
  return {{"model", to_string(mode)},
          {"folds", folds_json},
          {"aggregate",
           {{"sensitivity", agg_json(sensitivity)},
            {"specificity", agg_json(specificity)},
            {"f1_normal", agg_json(f1_normal)},
            {"accuracy", agg_json(accuracy)}}},
          {"warnings", warnings}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    const auto mode = parse_model_mode(j.at("model").get<std::string>());
    if (!mode) throw FormatError("metrics report: unknown model mode");
    r.mode = *mode;
    for (const auto& f : j.at("folds")) {
      FoldMetrics m;
      const auto& c = f.at("confusion");
      m.confusion = {c.at("tp_n").get<std::size_t>(), c.at("fn_n").get<std::size_t>(), c.at("fp_m").get<std::size_t>(),
                     c.at("tn_m").get<std::size_t>()};
      m.sensitivity = opt_from(f.at("sensitivity"));
      m.specificity = opt_from(f.at("specificity"));
      m.f1_normal = opt_from(f.at("f1_normal"));
      m.accuracy = opt_from(f.at("accuracy"));
      r.folds.push_back(m);
    }
    const auto& a = j.at("aggregate");
    r.sensitivity = agg_from(a.at("sensitivity"));
    r.specificity = agg_from(a.at("specificity"));
    r.f1_normal = agg_from(a.at("f1_normal"));
    r.accuracy = agg_from(a.at("accuracy"));
    r.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string format_table(std::span<const MetricsReport> reports) {
  const auto pad = [](std::string s, std::size_t width) {
    // "±" is two bytes but one column wide.
    std::size_t cols = 0;
    for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80;
    if (cols < width) s.append(width - cols, ' ');
    return s;
  };
  std::string out = pad("Model", 12) + pad("Sensitivity", 19) + pad("Specificity", 19) + "F1 Score\n";
  for (const auto& r : reports)
    out += pad(std::string(display_name(r.mode)), 12) + pad(cell(r.sensitivity), 19) + pad(cell(r.specificity), 19) +
           cell(r.f1_normal) + "\n";
  return out;
}

}  // namespace murmur
