#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "btsc/error.hpp"
#include "btsc/eval.hpp"
#include "btsc/metrics.hpp"
#include "btsc/report.hpp"
#include "btsc/synth.hpp"
#include "compare.hpp"

using namespace btsc;

namespace {

FeatureBank small_bank(std::uint64_t seed, double shift = 1.0, int dim = 4, int per_class = 40) {
  synth::SynthSpec spec;
  spec.num_classes = 2;
  spec.trials_per_class = per_class;
  spec.feature_dim = dim;
  spec.seed = seed;
  spec.channels.push_back(synth::make_channel("a", FeatureKind::ERP, 2, dim, shift, {0, 1}));
  spec.channels.push_back(synth::make_channel("b", FeatureKind::HGP, 2, dim, 0.0));
  spec.channels.push_back(synth::make_channel("c", FeatureKind::ERP, 2, dim, 0.5 * shift, {1}));
  return synth::generate_features(spec);
}

}  // namespace

TEST_CASE("stratified_kfold: balanced partition") {
  const std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const auto folds = stratified_kfold(labels, 5, 3);
  REQUIRE(folds.size() == 5);
  std::vector<int> seen(10, 0);
  for (const auto& f : folds) {
    REQUIRE(f.test.size() == 2);
    CHECK(labels[f.test[0]] != labels[f.test[1]]);
    CHECK(f.train.size() == 8);
    for (auto i : f.test) ++seen[i];
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    for (auto i : f.test) CHECK(all.count(i) == 0);
  }
  for (int s : seen) CHECK(s == 1);

  const auto again = stratified_kfold(labels, 5, 3);
  for (std::size_t f = 0; f < 5; ++f) CHECK(again[f].test == folds[f].test);

  const std::vector<int> short_class{0, 0, 0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(stratified_kfold(short_class, 5, 0), Error);
  CHECK_THROWS_AS(stratified_kfold(labels, 1, 0), Error);
}

TEST_CASE("property: per-class fold counts differ by at most one") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<int> labels;
    const int k = 2 + static_cast<int>(seed % 5);
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < k + static_cast<int>(seed) % 7 + c; ++i) labels.push_back(c);
    }
    std::shuffle(labels.begin(), labels.end(), std::mt19937_64(seed));
    const auto folds = stratified_kfold(labels, k, seed);
    for (int c = 0; c < 3; ++c) {
      std::vector<int> counts;
      for (const auto& f : folds) counts.push_back(static_cast<int>(std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return labels[i] == c; })));
      CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
    }
    std::size_t total = 0;
    for (const auto& f : folds) total += f.test.size();
    CHECK(total == labels.size());
  }
}

TEST_CASE("accuracy and macro F1") {
  const std::vector<int> y{0, 1, 0, 1};
  CHECK(accuracy(y, y) == 1.0);
  CHECK(accuracy(std::vector<int>{1, 0, 1, 0}, y) == 0.0);
  CHECK(accuracy(std::vector<int>{0, 1, 0, 0}, y) == 0.75);
  CHECK_THROWS_AS(accuracy(std::vector<int>{0}, y), Error);
  CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), Error);

  CHECK(f1_macro(y, y, 2) == 1.0);
  CHECK(f1_macro(std::vector<int>{0, 0, 0, 0}, y, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(f1_macro(std::vector<int>{1, 0, 1, 0}, y, 2) == 0.0);
  // A class absent from both sides is skipped.
  CHECK(f1_macro(y, y, 3) == 1.0);
  CHECK_THROWS_AS(f1_macro(std::vector<int>{0}, y, 2), Error);
}

TEST_CASE("binomial interval and summary statistics") {
  const auto ci = binomial_interval(0.5, 100);
  CHECK(ci.hi - ci.lo == doctest::Approx(2.0 * 1.959963984540054 * 0.05));
  const auto clipped = binomial_interval(0.99, 10);
  CHECK(clipped.hi <= 1.0);
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(v) == 2.5);
  CHECK(std_of(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(std_of(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("evaluate_nested: report means are the means of the folds") {
  const auto bank = small_bank(3);
  PipelineConfig cfg;
  cfg.seed = 10;
  const auto eval = evaluate_nested(bank, cfg);
  REQUIRE(eval.folds.size() == 5);
  std::vector<double> acc, f1;
  std::vector<int> hits(bank.n_trials(), 0);
  for (const auto& f : eval.folds) {
    acc.push_back(f.accuracy);
    f1.push_back(f.f1);
    CHECK(f.accuracy >= 0.0);
    CHECK(f.accuracy <= 1.0);
    CHECK(f.ensemble_cv_accuracy >= f.best_single_cv_accuracy);
    for (auto i : f.test_indices) ++hits[i];
  }
  for (int h : hits) CHECK(h == 1);
  CHECK(eval.accuracy_mean == mean_of(acc));
  CHECK(eval.f1_mean == mean_of(f1));
  CHECK(eval.accuracy_std == std_of(acc));
  CHECK(eval.accuracy_mean > 0.7);

  ReportConfig rc;
  rc.pipeline = cfg;
  rc.window_s = bank.window_s;
  const auto final_model = train_pipeline(bank, cfg, cfg.seed).ensemble;
  const auto report = make_report(rc, eval, {}, final_model);
  double sum = 0.0;
  for (const auto& f : report.folds) sum += f.accuracy;
  CHECK(report.accuracy_mean == sum / static_cast<double>(report.folds.size()));
  const auto round_trip = report_from_json(report_to_json(report));
  CHECK(report_to_json(round_trip).dump(2) == report_to_json(report).dump(2));
}

TEST_CASE("accuracy_over_time: last point equals the full evaluation") {
  const auto bank = small_bank(4, 1.0, 3, 30);
  PipelineConfig cfg;
  cfg.seed = 2;
  const auto curve = accuracy_over_time(bank, cfg);
  REQUIRE(curve.size() == 3);
  const auto full = evaluate_nested(bank, cfg);
  CHECK(curve.back().accuracy == full.accuracy_mean);
  CHECK(curve.back().time_s == doctest::Approx(bank.window_s));
  for (std::size_t j = 0; j < curve.size(); ++j) {
    CHECK(curve[j].horizon == static_cast<int>(j + 1));
    CHECK(curve[j].mean_members >= 1.0);
  }
}

TEST_CASE("evaluation is deterministic and independent of thread count") {
  const auto bank = small_bank(5);
  PipelineConfig cfg;
  cfg.seed = 77;
  ReportConfig rc;
  rc.pipeline = cfg;
  rc.window_s = bank.window_s;
  auto run = [&](int threads) {
    PipelineConfig c = cfg;
    c.threads = threads;
    const auto eval = evaluate_nested(bank, c);
    const auto curve = accuracy_over_time(bank, c);
    const auto model = train_pipeline(bank, c, c.seed).ensemble;
    ReportConfig r = rc;
    r.pipeline = c;
    return report_to_json(make_report(r, eval, curve, model)).dump(2);
  };
  const auto a = run(1);
  CHECK(a == run(1));
  CHECK(a == run(3));
}

TEST_CASE("leakage canary: test-fold contents never reach training") {
  const auto bank = small_bank(6);
  PipelineConfig cfg;
  cfg.seed = 8;
  const auto folds = stratified_kfold(bank.labels, cfg.k_folds, cfg.seed);
  const auto base = evaluate_nested(bank, cfg, folds);

  auto poisoned = bank;
  for (auto i : folds[0].test) {
    // Flip the label and write it into every feature.
    const int flipped = 1 - poisoned.labels[i];
    poisoned.labels[i] = flipped;
    for (auto& b : poisoned.blocks) b.values.row(static_cast<Eigen::Index>(i)).setConstant(100.0 * flipped);
  }
  const auto leak = evaluate_nested(poisoned, cfg, folds);
  CHECK(compare::same_pipeline(base.folds[0].trained, leak.folds[0].trained));
  // Sanity: the same perturbation does change a fold that trains on those rows.
  CHECK_FALSE(compare::same_pipeline(base.folds[1].trained, leak.folds[1].trained));
}

TEST_CASE("tables.csv and curve.svg") {
  EvalReport r;
  r.num_classes = 2;
  r.folds.push_back({0, 0.8, 0.79, 0.7, 0.75, {}, {}});
  r.folds.push_back({1, 0.6, 0.58, 0.6, 0.65, {}, {}});
  r.accuracy_mean = 0.7;
  r.accuracy_std = std_of(std::vector<double>{0.8, 0.6});
  std::ostringstream tables;
  write_tables_csv(r, tables);
  CHECK(tables.str().find("mean") != std::string::npos);
  CHECK(tables.str().find("std") != std::string::npos);

  std::vector<TimePoint> curve{{1, 0.5, 0.6, 1.0}, {2, 1.0, 0.8, 1.5}};
  std::ostringstream svg;
  write_curve_svg(curve, 0.5, svg);
  const auto s = svg.str();
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("polyline") != std::string::npos);
}
