#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "btsc/cv.hpp"
#include "btsc/ensemble.hpp"
#include "btsc/features.hpp"
#include "btsc/gaussian_model.hpp"

namespace btsc {

struct PipelineConfig {
  FitOptions fit;
  int k_folds = 5;
  std::uint64_t seed = 0;
  CombinationRule rule = CombinationRule::Likelihood;
  int max_members = kDefaultMaxMembers;
  int threads = 1;  // scheduling only; results do not depend on it
};

struct TrainedPipeline {
  std::vector<ChannelClassifier> candidates;  // one per bank block, in bank order
  EnsembleModel ensemble;
};

// Fits every candidate (minimal horizon via k-fold CV on `train`) and runs
// greedy selection on the same folds. Only `train` is ever read.
TrainedPipeline train_pipeline(const FeatureBank& train, const PipelineConfig& config, std::uint64_t seed);

struct FoldOutcome {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::vector<std::size_t> test_indices;
  std::vector<int> predictions;
  TrainedPipeline trained;
  double best_single_cv_accuracy = 0.0;  // first greedy step, on the training folds
  double ensemble_cv_accuracy = 0.0;     // last greedy step, on the training folds
};

struct NestedEvaluation {
  std::vector<FoldOutcome> folds;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double f1_mean = 0.0;
  double f1_std = 0.0;
};

// Outer k-fold evaluation. Horizon and subset selection happen inside each
// outer training fold with inner folds seeded by derive_seed(seed, fold).
NestedEvaluation evaluate_nested(const FeatureBank& bank, const PipelineConfig& config,
                                 std::span<const Fold> outer_folds);
NestedEvaluation evaluate_nested(const FeatureBank& bank, const PipelineConfig& config);

struct TimePoint {
  int horizon = 0;
  double time_s = 0.0;
  double accuracy = 0.0;
  double mean_members = 0.0;  // feature vectors in the ensemble, averaged over folds
};

// Nested evaluation restricted to the first j features, for j = 1..d.
std::vector<TimePoint> accuracy_over_time(const FeatureBank& bank, const PipelineConfig& config);

double mean_of(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
double std_of(std::span<const double> values);

}  // namespace btsc
