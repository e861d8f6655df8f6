#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "murmur/model.h"
#include "murmur/types.h"

namespace murmur {

// Normal is the positive class.
struct Confusion {
  std::size_t tp_n = 0;  // normal predicted normal
  std::size_t fn_n = 0;  // normal predicted murmur
  std::size_t fp_m = 0;  // murmur predicted normal
  std::size_t tn_m = 0;  // murmur predicted murmur

  std::size_t normals() const { return tp_n + fn_n; }
  std::size_t murmurs() const { return fp_m + tn_m; }
  std::size_t total() const { return normals() + murmurs(); }
  void add(Label truth, Label predicted);

  bool operator==(const Confusion&) const = default;
};

Confusion confusion_of(std::span<const Label> truth, std::span<const Label> predicted);

// Empty optionals mark undefined metrics ("n/a").
struct FoldMetrics {
  Confusion confusion;
  std::optional<double> sensitivity;  // tp_n / normals
  std::optional<double> specificity;  // tn_m / murmurs
  std::optional<double> f1_normal;    // 2 tp_n / (2 tp_n + fp_m + fn_n), needs normals
  std::optional<double> accuracy;     // (tp_n + tn_m) / total

  static FoldMetrics from_confusion(const Confusion& c);
  bool operator==(const FoldMetrics&) const = default;
};

struct Aggregate {
  std::optional<double> mean;
  std::optional<double> std;  // population
  std::size_t defined = 0;    // folds contributing

  bool operator==(const Aggregate&) const = default;
};

// Mean and population std over the defined values.
Aggregate aggregate(std::span<const std::optional<double>> values);

struct MetricsReport {
  ModelMode mode = ModelMode::kFull;
  std::vector<FoldMetrics> folds;
  Aggregate sensitivity, specificity, f1_normal, accuracy;
  std::vector<std::string> warnings;

  static MetricsReport from_folds(ModelMode mode, std::vector<FoldMetrics> folds);
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  bool operator==(const MetricsReport&) const = default;
};

// One row per report: Model | Sensitivity | Specificity | F1 Score, cells as
// "mean ± std" with four decimals or "n/a".
std::string format_table(std::span<const MetricsReport> reports);

}  // namespace murmur
