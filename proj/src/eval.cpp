#include "btsc/eval.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include "btsc/error.hpp"
#include "btsc/metrics.hpp"
#include "btsc/parallel.hpp"

namespace btsc {

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double std_of(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

TrainedPipeline train_pipeline(const FeatureBank& train, const PipelineConfig& config, std::uint64_t seed) {
  validate(train);
  const auto folds = stratified_kfold(train.labels, config.k_folds, seed);

  std::vector<std::optional<ChannelClassifier>> fitted(train.blocks.size());
  parallel_for(train.blocks.size(), config.threads, [&](std::size_t b) {
    const auto& block = train.blocks[b];
    fitted[b] = fit_channel_classifier(block.channel, block.kind, block.values, train.labels,
                                       train.num_classes, folds, config.fit);
  });
  std::vector<ChannelClassifier> candidates;
  candidates.reserve(fitted.size());
  for (auto& c : fitted) candidates.push_back(std::move(*c));

  GreedyOptions greedy;
  greedy.rule = config.rule;
  greedy.max_members = config.max_members;
  greedy.fit = config.fit;
  greedy.threads = config.threads;
  EnsembleModel ensemble = greedy_select(candidates, train, folds, greedy);
  return {std::move(candidates), std::move(ensemble)};
}

NestedEvaluation evaluate_nested(const FeatureBank& bank, const PipelineConfig& config,
                                 std::span<const Fold> outer_folds) {
  validate(bank);
  if (outer_folds.empty()) throw_data("evaluation needs at least one fold");

  PipelineConfig inner = config;
  inner.threads = 1;
  std::vector<std::optional<FoldOutcome>> outcomes(outer_folds.size());
  parallel_for(outer_folds.size(), config.threads, [&](std::size_t f) {
    const Fold& fold = outer_folds[f];
    const FeatureBank train = bank.rows(fold.train);
    const FeatureBank test = bank.rows(fold.test);
    TrainedPipeline trained = train_pipeline(train, inner, derive_seed(config.seed, f));
    FoldOutcome outcome{0.0, 0.0, fold.test, trained.ensemble.predict(test), std::move(trained), 0.0, 0.0};
    outcome.accuracy = accuracy(outcome.predictions, test.labels);
    outcome.f1 = f1_macro(outcome.predictions, test.labels, bank.num_classes);
    const auto& trace = outcome.trained.ensemble.trace();
    outcome.best_single_cv_accuracy = trace.front().cv_accuracy;
    outcome.ensemble_cv_accuracy = trace.back().cv_accuracy;
    outcomes[f] = std::move(outcome);
  });

  NestedEvaluation result;
  std::vector<double> accs, f1s;
  for (auto& o : outcomes) {
    accs.push_back(o->accuracy);
    f1s.push_back(o->f1);
    result.folds.push_back(std::move(*o));
  }
  result.accuracy_mean = mean_of(accs);
  result.accuracy_std = std_of(accs);
  result.f1_mean = mean_of(f1s);
  result.f1_std = std_of(f1s);
  return result;
}

NestedEvaluation evaluate_nested(const FeatureBank& bank, const PipelineConfig& config) {
  const auto folds = stratified_kfold(bank.labels, config.k_folds, config.seed);
  return evaluate_nested(bank, config, folds);
}

std::vector<TimePoint> accuracy_over_time(const FeatureBank& bank, const PipelineConfig& config) {
  validate(bank);
  const auto folds = stratified_kfold(bank.labels, config.k_folds, config.seed);
  const std::size_t d = bank.dim();
  PipelineConfig per_horizon = config;
  per_horizon.threads = 1;
  std::vector<TimePoint> curve(d);
  parallel_for(d, config.threads, [&](std::size_t i) {
    const auto horizon = i + 1;
    const NestedEvaluation eval = evaluate_nested(bank.truncated(horizon), per_horizon, folds);
    double members = 0.0;
    for (const auto& f : eval.folds) members += static_cast<double>(f.trained.ensemble.members().size());
    curve[i] = TimePoint{static_cast<int>(horizon), bank.window_s * static_cast<double>(horizon) / static_cast<double>(d), eval.accuracy_mean,
                         members / static_cast<double>(eval.folds.size())};
  });
  return curve;
}

}  // namespace btsc
