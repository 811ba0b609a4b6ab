#pragma once

#include <span>

namespace btsc {

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Unweighted mean of per-class F1 over classes that occur in either the
// predictions or the labels.
double f1_macro(std::span<const int> predictions, std::span<const int> labels, int num_classes);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Normal-approximation binomial interval for a proportion observed over n trials.
Interval binomial_interval(double p, std::size_t n, double z = 1.959963984540054);

}  // namespace btsc
