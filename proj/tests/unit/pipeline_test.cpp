#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "murmur/cross_validate.h"
#include "murmur/error.h"
#include "murmur/preprocess.h"
#include "murmur/synth.h"
#include "oracles.h"

using namespace murmur;

namespace {

// Subjects carry 1..max_segments segments each; a subject is murmur with
// probability p_murmur, and all of its segments share its label.
std::vector<SegmentInfo> random_pool(std::size_t subjects, std::mt19937_64& rng, double p_murmur = 0.2,
                                     std::size_t max_segments = 5) {
  std::uniform_int_distribution<std::size_t> count(1, max_segments);
  std::bernoulli_distribution murmur(p_murmur);
  std::vector<SegmentInfo> pool;
  for (std::size_t s = 0; s < subjects; ++s) {
    const Label label = murmur(rng) ? Label::kMurmur : Label::kNormal;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      SegmentInfo info;
      info.recording_id = "rec" + std::to_string(s);
      info.index = i;
      info.segment_id = info.recording_id + "#" + std::to_string(i);
      info.subject = "subject" + std::to_string(s);
      info.label = label;
      pool.push_back(info);
    }
  }
  return pool;
}

// Brute-force partition and subject-disjointness checks.
void expect_valid_plan(std::span<const SegmentInfo> pool, const FoldPlan& plan) {
  std::map<std::string, std::string> subject_of;
  for (const auto& s : pool) subject_of[s.segment_id] = s.subject;

  std::multiset<std::string> tested;
  for (const auto& f : plan.folds)
    for (const auto& id : f.test) tested.insert(id);
  ASSERT_EQ(tested.size(), pool.size());
  for (const auto& s : pool) EXPECT_EQ(tested.count(s.segment_id), 1u) << s.segment_id;

  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    const auto& f = plan.folds[k];
    EXPECT_EQ(f.train.size() + f.test.size(), pool.size());
    std::set<std::string> train_subjects, test_subjects;
    for (const auto& id : f.train) train_subjects.insert(subject_of.at(id));
    for (const auto& id : f.test) test_subjects.insert(subject_of.at(id));
    for (const auto& s : test_subjects) EXPECT_FALSE(train_subjects.count(s)) << "fold " << k << " " << s;
  }
}

std::vector<Label> label_run(std::size_t normals, std::size_t murmurs) {
  std::vector<Label> v(normals, Label::kNormal);
  v.insert(v.end(), murmurs, Label::kMurmur);
  return v;
}

std::vector<std::string> id_run(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("id" + std::to_string(i));
  return v;
}

FoldMetrics metrics_for(std::span<const Label> truth, std::span<const Label> predicted) {
  return FoldMetrics::from_confusion(confusion_of(truth, predicted));
}

// Fraction of signal energy whose frequency lies in [lo, hi] Hz, from a
// brute-force DFT of the whole recording.
double band_energy_ratio(const std::vector<double>& x, double rate, double lo, double hi) {
  const auto X = oracle::dft_real(x, x.size());
  double total = 0.0, band = 0.0;
  for (std::size_t k = 0; k <= x.size() / 2; ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(x.size());
    const double p = std::norm(X[k]);
    total += p;
    if (f >= lo && f <= hi) band += p;
  }
  return band / total;
}

FeatureSet synthetic_features(std::size_t recordings, std::uint64_t first_seed = 0) {
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < recordings; ++i) {
    const auto label = i % 2 ? Label::kMurmur : Label::kNormal;
    for (auto& s : preprocess(synth_pcg(label, 4.0, first_seed + i))) segments.push_back(std::move(s));
  }
  return featurize(segments);
}

// The documented smoke set: 8 four-second synthetic recordings, seeds 0-7,
// alternating normal and murmur, one segment each.
const FeatureSet& smoke_set() {
  static const FeatureSet set = synthetic_features(8);
  return set;
}

std::vector<std::size_t> all_rows(const FeatureSet& f) {
  std::vector<std::size_t> rows(f.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

bool same_parameters(const Model& a, const Model& b) {
  const auto x = a.named_arrays(), y = b.named_arrays();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& s = x[i].tensor;
    const auto& t = y[i].tensor;
    if (x[i].name != y[i].name || s.shape() != t.shape()) return false;
    if (std::memcmp(s.data(), t.data(), s.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST(Folds, TenSubjectsOfTwoSegments) {
  std::vector<SegmentInfo> pool;
  for (int s = 0; s < 10; ++s)
    for (int i = 0; i < 2; ++i) {
      SegmentInfo info;
      info.recording_id = "r" + std::to_string(s);
      info.index = static_cast<std::size_t>(i);
      info.segment_id = info.recording_id + "#" + std::to_string(i);
      info.subject = "p" + std::to_string(s);
      info.label = s < 5 ? Label::kMurmur : Label::kNormal;
      pool.push_back(info);
    }
  const auto plan = make_folds(pool, 5, 11);
  ASSERT_EQ(plan.folds.size(), 5u);
  EXPECT_TRUE(plan.warnings.empty());
  for (const auto& f : plan.folds) {
    ASSERT_EQ(f.test.size(), 4u);
    std::set<std::string> subjects;
    for (const auto& id : f.test) subjects.insert(id.substr(0, id.find('#')));
    EXPECT_EQ(subjects.size(), 2u);
    EXPECT_EQ(f.train.size(), 16u);
  }
  expect_valid_plan(pool, plan);
  EXPECT_EQ(make_folds(pool, 5, 11), plan);
}

TEST(Folds, RandomSubjectPoolsArePartitions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pool = random_pool(200, rng);
    const std::uint64_t seed = rng();
    const auto plan = make_folds(pool, 5, seed);
    expect_valid_plan(pool, plan);
    EXPECT_EQ(make_folds(pool, 5, seed), plan);

    // About 40 murmur subjects: stratification puts both classes in every test fold.
    std::map<std::string, Label> label_of;
    for (const auto& s : pool) label_of[s.segment_id] = s.label;
    for (const auto& f : plan.folds) {
      bool normal = false, murmur = false;
      for (const auto& id : f.test) (label_of[id] == Label::kNormal ? normal : murmur) = true;
      EXPECT_TRUE(normal && murmur);
    }
  }
}

TEST(Folds, StratificationBalancesMurmurSegments) {
  std::mt19937_64 rng(8);
  const auto pool = random_pool(200, rng, 0.3, 3);
  const auto plan = make_folds(pool, 5, 1);
  std::map<std::string, Label> label_of;
  for (const auto& s : pool) label_of[s.segment_id] = s.label;
  std::vector<std::size_t> murmurs;
  for (const auto& f : plan.folds)
    murmurs.push_back(static_cast<std::size_t>(
        std::count_if(f.test.begin(), f.test.end(), [&](const auto& id) { return label_of[id] == Label::kMurmur; })));
  // Greedy placement with at most 3 segments per subject keeps folds within 3 of each other.
  const auto [lo, hi] = std::minmax_element(murmurs.begin(), murmurs.end());
  EXPECT_LE(*hi - *lo, 3u);
}

TEST(Folds, FewMurmurSubjectsWarn) {
  std::mt19937_64 rng(3);
  auto pool = random_pool(30, rng, 0.0);
  for (auto& s : pool)
    if (s.subject == "subject0" || s.subject == "subject1") s.label = Label::kMurmur;
  const auto plan = make_folds(pool, 5, 0);
  EXPECT_FALSE(plan.warnings.empty());
  expect_valid_plan(pool, plan);
}

TEST(Folds, SubjectLevelLabelIsMurmurIfAnySegmentIs) {
  std::mt19937_64 rng(4);
  auto pool = random_pool(12, rng, 0.0, 4);
  // One mixed subject per fold is enough to satisfy the murmur quota.
  for (auto& s : pool)
    if (s.index == 0 && std::stoi(s.subject.substr(7)) < 5) s.label = Label::kMurmur;
  const auto plan = make_folds(pool, 5, 2);
  EXPECT_TRUE(plan.warnings.empty());
  expect_valid_plan(pool, plan);
}

TEST(Folds, RejectsBadPools) {
  EXPECT_THROW(make_folds({}, 5, 0), ArgumentError);
  std::mt19937_64 rng(1);
  auto pool = random_pool(10, rng);
  EXPECT_THROW(make_folds(pool, 1, 0), ArgumentError);
  pool[3].subject.clear();
  EXPECT_THROW(make_folds(pool, 5, 0), ArgumentError);
}

TEST(Folds, PlanJsonRoundTrip) {
  std::mt19937_64 rng(2);
  const auto plan = make_folds(random_pool(40, rng), 5, 99);
  const auto j = plan.to_json();
  EXPECT_EQ(j.at("seed"), 99);
  EXPECT_EQ(j.at("k"), 5);
  EXPECT_EQ(j.at("folds").size(), 5u);
  EXPECT_EQ(FoldPlan::from_json(j), plan);
  EXPECT_EQ(FoldPlan::from_json(nlohmann::json::parse(j.dump())), plan);

  auto bad = j;
  bad["k"] = 4;
  EXPECT_THROW(FoldPlan::from_json(bad), FormatError);
  EXPECT_THROW(FoldPlan::from_json({{"seed", 1}}), FormatError);
}

TEST(Upsample, ThirtyNineToOne) {
  const auto ids = id_run(40);
  const auto labels = label_run(39, 1);
  const auto out = balance_upsample(ids, labels, 4);
  ASSERT_EQ(out.size(), 78u);
  EXPECT_EQ(std::count(out.begin(), out.end(), "id39"), 39);
  for (std::size_t i = 0; i < 39; ++i) EXPECT_EQ(std::count(out.begin(), out.end(), ids[i]), 1);
}

TEST(Upsample, BalancedInputIsPermuted) {
  const auto ids = id_run(10);
  const auto labels = label_run(5, 5);
  auto out = balance_upsample(ids, labels, 1);
  ASSERT_EQ(out.size(), 10u);
  std::sort(out.begin(), out.end());
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(out, sorted);
}

TEST(Upsample, PerFoldScaleArithmetic) {
  const auto ids = id_run(2440 + 218);
  const auto labels = label_run(2440, 218);
  const auto out = balance_upsample(ids, labels, 17);
  ASSERT_EQ(out.size(), 4880u);
  std::map<std::string, int> copies;
  for (const auto& id : out) ++copies[id];
  int elevens = 0, twelves = 0;
  for (std::size_t i = 2440; i < ids.size(); ++i) {
    const int c = copies[ids[i]];
    ASSERT_TRUE(c == 11 || c == 12) << ids[i] << " x" << c;
    (c == 11 ? elevens : twelves) += 1;
  }
  EXPECT_EQ(twelves, 42);
  EXPECT_EQ(elevens, 218 - 42);
}

TEST(Upsample, ExactEqualityOverRandomRatios) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> size(1, 120);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t a = size(rng), b = size(rng);
    if (trial == 0) a = 39, b = 1;
    const std::size_t n = a + b;
    // Labels interleaved at random positions.
    std::vector<Label> labels = label_run(a, b);
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto ids = id_run(n);
    const std::uint64_t seed = rng();
    const auto out = balance_upsample(ids, labels, seed);

    std::map<std::string, Label> label_of;
    for (std::size_t i = 0; i < n; ++i) label_of[ids[i]] = labels[i];
    std::size_t normals = 0, murmurs = 0;
    std::map<std::string, std::size_t> copies;
    for (const auto& id : out) {
      ++(label_of.at(id) == Label::kNormal ? normals : murmurs);
      ++copies[id];
    }
    ASSERT_EQ(normals, murmurs) << a << ":" << b;
    EXPECT_EQ(normals, std::max(a, b));

    const std::size_t small = std::min(a, b), big = std::max(a, b);
    const Label minority = a < b ? Label::kNormal : Label::kMurmur;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = copies[ids[i]];
      if (a == b || labels[i] != minority) {
        EXPECT_EQ(c, 1u);
      } else {
        EXPECT_TRUE(c == big / small || c == big / small + 1) << c;
      }
    }
    EXPECT_EQ(balance_upsample(ids, labels, seed), out);
  }
}

TEST(Upsample, SingleClassIsAConfigError) {
  const auto ids = id_run(4);
  EXPECT_THROW(balance_upsample(ids, label_run(4, 0), 0), ConfigError);
  EXPECT_THROW(balance_upsample(ids, label_run(0, 4), 0), ConfigError);
  EXPECT_THROW(balance_upsample(ids, label_run(1, 1), 0), ArgumentError);
}

TEST(Metrics, PerfectClassifier) {
  const auto truth = label_run(10, 2);
  const auto m = metrics_for(truth, truth);
  EXPECT_EQ(m.confusion, (Confusion{10, 0, 0, 2}));
  EXPECT_EQ(m.sensitivity, 1.0);
  EXPECT_EQ(m.specificity, 1.0);
  EXPECT_EQ(m.f1_normal, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Metrics, AllNormalPredictor) {
  const auto truth = label_run(10, 2);
  const auto m = metrics_for(truth, label_run(12, 0));
  EXPECT_EQ(m.confusion, (Confusion{10, 0, 2, 0}));
  EXPECT_EQ(m.sensitivity, 1.0);
  EXPECT_EQ(m.specificity, 0.0);
  // precision 10/12, recall 1
  const double p = 10.0 / 12.0;
  EXPECT_NEAR(*m.f1_normal, 2 * p / (p + 1), 1e-15);
  EXPECT_NEAR(*m.f1_normal, 0.9091, 5e-5);
  EXPECT_NEAR(*m.accuracy, 10.0 / 12.0, 1e-15);
}

TEST(Metrics, UndefinedAreMarkedNotZeroed) {
  const auto normals_only = label_run(5, 0);
  const auto m = metrics_for(normals_only, label_run(3, 2));
  EXPECT_FALSE(m.specificity);
  ASSERT_TRUE(m.sensitivity);
  EXPECT_DOUBLE_EQ(*m.sensitivity, 0.6);

  const auto murmurs_only = label_run(0, 4);
  const auto n = metrics_for(murmurs_only, murmurs_only);
  EXPECT_FALSE(n.sensitivity);
  EXPECT_FALSE(n.f1_normal);
  EXPECT_EQ(n.specificity, 1.0);

  const auto empty = FoldMetrics::from_confusion({});
  EXPECT_FALSE(empty.sensitivity || empty.specificity || empty.f1_normal || empty.accuracy);
  EXPECT_THROW(confusion_of(label_run(2, 0), label_run(1, 0)), ArgumentError);
}

TEST(Metrics, RatesTimesClassSizesAreCounts) {
  std::mt19937_64 rng(12);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Label> truth, predicted;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(coin(rng) ? Label::kMurmur : Label::kNormal);
      predicted.push_back(coin(rng) ? Label::kMurmur : Label::kNormal);
    }
    const auto m = metrics_for(truth, predicted);
    EXPECT_EQ(m.confusion.total(), n);
    for (auto [rate, size] : {std::pair{m.sensitivity, m.confusion.normals()},
                              std::pair{m.specificity, m.confusion.murmurs()}}) {
      if (!rate) {
        EXPECT_EQ(size, 0u);
        continue;
      }
      EXPECT_GE(*rate, 0.0);
      EXPECT_LE(*rate, 1.0);
      const double count = *rate * static_cast<double>(size);
      EXPECT_NEAR(count, std::round(count), 1e-9);
    }
    if (m.f1_normal) {
      EXPECT_GE(*m.f1_normal, 0.0);
      EXPECT_LE(*m.f1_normal, 1.0);
    }
  }
}

TEST(Aggregate, PopulationStd) {
  const std::vector<std::optional<double>> two{0.9, 1.0};
  const auto a = aggregate(two);
  EXPECT_NEAR(*a.mean, 0.95, 1e-15);
  EXPECT_NEAR(*a.std, 0.05, 1e-15);
  EXPECT_EQ(a.defined, 2u);

  const std::vector<std::optional<double>> ones(5, 1.0);
  const auto b = aggregate(ones);
  EXPECT_EQ(*b.mean, 1.0);
  EXPECT_EQ(*b.std, 0.0);

  const std::vector<std::optional<double>> gaps{0.5, std::nullopt, 0.7};
  const auto c = aggregate(gaps);
  EXPECT_EQ(c.defined, 2u);
  EXPECT_NEAR(*c.mean, 0.6, 1e-15);

  const std::vector<std::optional<double>> none{std::nullopt, std::nullopt};
  EXPECT_FALSE(aggregate(none).mean);
}

TEST(Report, JsonRoundTripAndTable) {
  const auto truth = label_run(10, 2);
  std::vector<FoldMetrics> folds{metrics_for(truth, truth), metrics_for(truth, label_run(12, 0)),
                                 metrics_for(label_run(4, 0), label_run(4, 0))};
  const auto r = MetricsReport::from_folds(ModelMode::kFull, folds);
  EXPECT_EQ(r.specificity.defined, 2u);
  EXPECT_EQ(r.specificity.mean, 0.5);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("specificity"), std::string::npos);

  const auto j = r.to_json();
  EXPECT_EQ(j.at("folds").at(2).at("specificity"), "n/a");
  EXPECT_EQ(MetricsReport::from_json(nlohmann::json::parse(j.dump())), r);
  EXPECT_THROW(MetricsReport::from_json({{"mode", "full"}}), FormatError);

  auto cnn = MetricsReport::from_folds(ModelMode::kCnnOnly, {metrics_for(truth, truth)});
  auto rnn = MetricsReport::from_folds(ModelMode::kBilstmOnly, {metrics_for(label_run(0, 3), label_run(0, 3))});
  const std::vector<MetricsReport> rows{cnn, rnn, r};
  const auto table = format_table(rows);
  const auto first_line = table.substr(0, table.find('\n'));
  EXPECT_EQ(first_line.find("Model"), 0u);
  EXPECT_NE(first_line.find("Sensitivity"), std::string::npos);
  EXPECT_NE(first_line.find("Specificity"), std::string::npos);
  EXPECT_NE(first_line.find("F1 Score"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_NE(table.find("CNN         1.0000 ± 0.0000"), std::string::npos) << table;
  EXPECT_NE(table.find("BiLSTM      n/a"), std::string::npos) << table;
  EXPECT_NE(table.find("CNN+BiLSTM  1.0000 ± 0.0000"), std::string::npos) << table;
}

TEST(Synth, NormalEnergyStaysLow) {
  const auto r = synth_pcg(Label::kNormal, 4.0, 7);
  EXPECT_EQ(r.rate, 2000);
  ASSERT_EQ(r.samples.size(), 8000u);
  EXPECT_LT(band_energy_ratio(r.samples, 2000.0, 150.0, 1000.0), 0.05);
}

TEST(Synth, MurmurFillsTheHighBand) {
  const auto r = synth_pcg(Label::kMurmur, 4.0, 7);
  ASSERT_EQ(r.samples.size(), 8000u);
  EXPECT_GT(band_energy_ratio(r.samples, 2000.0, 150.0, 600.0), 0.15);
}

TEST(Synth, IdentityAndDeterminism) {
  const auto a = synth_pcg(Label::kMurmur, 3.5, 12);
  const auto b = synth_pcg(Label::kMurmur, 3.5, 12);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.samples.size(), 7000u);
  EXPECT_EQ(a.id, "synth_murmur_12");
  EXPECT_EQ(a.subject, a.id);
  EXPECT_EQ(a.label, Label::kMurmur);
  EXPECT_EQ(a.source, Source::kSynthetic);
  EXPECT_NO_THROW(validate_pool_recording(a));
  EXPECT_NE(synth_pcg(Label::kMurmur, 3.5, 13).samples, a.samples);
  EXPECT_NE(synth_pcg(Label::kNormal, 3.5, 12).samples, a.samples);

  EXPECT_NO_THROW(synth_pcg(Label::kNormal, 2.0, 0));
  EXPECT_THROW(synth_pcg(Label::kNormal, 1.99, 0), ArgumentError);
  EXPECT_THROW(synth_pcg(Label::kNormal, std::nan(""), 0), ArgumentError);
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto breaker : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& t) { t.epochs = 0; }, [](TrainConfig& t) { t.batch_size = 0; },
           [](TrainConfig& t) { t.lr = 0.0; }, [](TrainConfig& t) { t.lr = NAN; },
           [](TrainConfig& t) { t.keep_prob = 0.0; }, [](TrainConfig& t) { t.keep_prob = 1.5; },
           [](TrainConfig& t) { t.l2_lambda = -1.0; }}) {
    TrainConfig t;
    breaker(t);
    EXPECT_THROW(t.validate(), ConfigError);
  }
  EXPECT_EQ(c.model_config().l2_lambda, c.l2_lambda);
  EXPECT_EQ(c.model_config().keep_prob, c.keep_prob);
}

TEST(Train, SmokeLossIsMonotoneForTenEpochs) {
  const auto& f = smoke_set();
  ASSERT_EQ(f.size(), 8u);
  TrainConfig c;
  c.epochs = 10;
  c.patience = 0;
  const auto result = train_fold(f, all_rows(f), c);
  ASSERT_EQ(result.log.size(), 10u);
  for (std::size_t e = 1; e < result.log.size(); ++e)
    EXPECT_LE(result.log[e].loss, result.log[e - 1].loss + 1e-6) << "epoch " << e + 1;
  EXPECT_EQ(result.log.back().accuracy, 1.0);
  EXPECT_EQ(result.steps, 10u);
}

TEST(Train, SameSeedSameParameters) {
  const auto& f = smoke_set();
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 3;
  c.seed = 5;
  const auto a = train_fold(f, all_rows(f), c);
  const auto b = train_fold(f, all_rows(f), c);
  EXPECT_TRUE(same_parameters(a.model, b.model));
  EXPECT_EQ(a.log, b.log);
  // Final short batch is kept: ceil(8 / 3) steps per epoch.
  EXPECT_EQ(a.log[0].steps, 3u);
  EXPECT_EQ(a.steps, 6u);

  c.seed = 6;
  EXPECT_FALSE(same_parameters(a.model, train_fold(f, all_rows(f), c).model));
}

TEST(Train, FeatureSetsShareTheShuffleOrder) {
  const auto& f = smoke_set();
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 4;
  c.record_orders = true;
  const std::vector<std::size_t> rows{7, 1, 4, 4, 0, 2};
  const auto r = train_fold(f, rows, c);
  ASSERT_EQ(r.spec_orders.size(), 3u);
  EXPECT_EQ(r.spec_orders, r.ceps_orders);
  for (const auto& order : r.spec_orders) {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    auto expected = rows;
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(sorted, expected);
  }
  EXPECT_NE(r.spec_orders[0], r.spec_orders[1]);
}

TEST(Train, EarlyStopHonoursPatience) {
  const auto& f = smoke_set();
  TrainConfig c;
  c.epochs = 40;
  c.patience = 1;
  c.min_delta = 1.0;  // no epoch can improve by a whole nat
  const auto r = train_fold(f, all_rows(f), c);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.log.size(), 2u);
}

TEST(Train, EvaluateCountsEveryRow) {
  const auto& f = smoke_set();
  TrainConfig c;
  c.epochs = 1;
  auto r = train_fold(f, all_rows(f), c);
  const std::vector<std::size_t> rows{0, 1, 2, 5};
  const auto m = evaluate(r.model, f, rows, 3);
  EXPECT_EQ(m.confusion.total(), 4u);
  EXPECT_EQ(m.confusion.normals(), 2u);

  const auto p = predict_proba(r.model, f, rows, 3);
  ASSERT_EQ(p.shape(), (nn::Shape{4, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[2 * i] + p[2 * i + 1], 1.0, 1e-12);
  // Batching does not change infer-mode outputs.
  const auto q = predict_proba(r.model, f, rows, 1);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(CrossValidate, CnnOnlyRunIsDeterministic) {
  const auto f = synthetic_features(20, 100);
  CvConfig c;
  c.train.mode = ModelMode::kCnnOnly;
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.seed = 3;
  const auto a = cross_validate(f, c);
  ASSERT_EQ(a.folds.size(), 5u);
  ASSERT_EQ(a.models.size(), 5u);
  EXPECT_EQ(a.report.mode, ModelMode::kCnnOnly);
  std::size_t tested = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& fold = a.folds[k];
    tested += fold.test_size;
    EXPECT_EQ(fold.metrics.confusion.total(), fold.test_size);
    EXPECT_EQ(fold.test_size, a.plan.folds[k].test.size());
    EXPECT_EQ(fold.train_size % 2, 0u);
    EXPECT_GE(fold.train_size, a.plan.folds[k].train.size());
  }
  EXPECT_EQ(tested, f.size());

  const auto b = cross_validate(f, c);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.plan, b.plan);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_TRUE(same_parameters(a.models[k], b.models[k]));

  c.jobs = 3;
  const auto parallel = cross_validate(f, c);
  EXPECT_EQ(parallel.report, a.report);
  EXPECT_EQ(parallel.report.to_json().dump(), a.report.to_json().dump());
}

TEST(CrossValidate, RejectsDuplicateIds) {
  auto f = synthetic_features(2);
  const auto info = f.info(0);
  const std::vector<float> spec(f.spec(0).begin(), f.spec(0).end()), ceps(f.ceps(0).begin(), f.ceps(0).end());
  f.add_raw(info, spec, ceps);
  EXPECT_THROW(cross_validate(f, CvConfig{}), ValidationError);
  EXPECT_THROW(cross_validate(FeatureSet{}, CvConfig{}), ArgumentError);
}
