#include "btsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "btsc/error.hpp"

namespace btsc {

namespace {

void check_lengths(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw_data("length mismatch between predictions and labels");
  if (labels.empty()) throw_data("metrics need at least one prediction");
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double f1_macro(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  check_lengths(predictions, labels);
  if (num_classes < 1) throw_data("f1_macro needs num_classes >= 1");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(k, 0), predicted(k, 0), actual(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes) throw_data("class index out of range");
    ++predicted[static_cast<std::size_t>(p)];
    ++actual[static_cast<std::size_t>(y)];
    if (p == y) ++tp[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (predicted[c] == 0 && actual[c] == 0) continue;
    ++counted;
    // F1 = 2TP / (predicted + actual); zero when either side is empty.
    sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(predicted[c] + actual[c]);
  }
  return sum / static_cast<double>(counted);
}

Interval binomial_interval(double p, std::size_t n, double z) {
  const double half = z * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

}  // namespace btsc
