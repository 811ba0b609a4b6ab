#include "btsc/cv.hpp"

#include <algorithm>
#include <random>

#include "btsc/error.hpp"

namespace btsc {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw_data("k-fold cross-validation needs k >= 2");
  if (labels.empty()) throw_data("cannot build folds over an empty label set");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw_data("negative label");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> tests(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k)) {
      throw_data("fold construction failed: class " + std::to_string(c) + " has " +
                 std::to_string(members.size()) + " trials, fewer than k=" + std::to_string(k));
    }
    std::shuffle(members.begin(), members.end(), rng);
    // Rotating the starting fold keeps overall fold sizes balanced too.
    for (std::size_t i = 0; i < members.size(); ++i) {
      tests[(offset + i) % static_cast<std::size_t>(k)].push_back(members[i]);
    }
    offset = (offset + members.size()) % static_cast<std::size_t>(k);
  }

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::sort(tests[f].begin(), tests[f].end());
    folds[f].test = tests[f];
    std::vector<bool> in_test(labels.size(), false);
    for (auto i : tests[f]) in_test[i] = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!in_test[i]) folds[f].train.push_back(i);
    }
  }
  return folds;
}

}  // namespace btsc
