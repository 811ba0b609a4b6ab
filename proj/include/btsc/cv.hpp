#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace btsc {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified k-fold split. Indices of each class are shuffled with a
// generator seeded from `seed`, then dealt round-robin over folds, so
// per-class counts across test folds differ by at most one.
std::vector<Fold> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

// Deterministic seed derivation for nested procedures (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace btsc
