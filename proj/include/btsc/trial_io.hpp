#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "btsc/types.hpp"

namespace btsc {

inline constexpr int kDatasetFormatVersion = 1;

// What the sample axis of a TrialSet holds. Raw sets carry time-domain
// recordings; feature sets carry one feature vector per (trial, channel),
// e.g. as emitted by the synthetic generator in feature mode.
enum class DataContent { Raw, Features };

/// Multi-trial, multi-channel recording stored as float32 in
/// [trial][channel][sample] order.
struct TrialSet {
  std::vector<float> data;
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  double fs = 0.0;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> channel_names;
  std::size_t t0_index = 0;

  DataContent content = DataContent::Raw;
  // Feature sets only: kind of each channel's feature vector and the
  // post-onset window the features summarize.
  std::vector<FeatureKind> feature_kinds;
  double window_s = 0.0;

  std::span<const float> channel(std::size_t trial, std::size_t ch) const {
    return {data.data() + (trial * n_channels + ch) * n_samples, n_samples};
  }
  std::span<float> channel(std::size_t trial, std::size_t ch) {
    return {data.data() + (trial * n_channels + ch) * n_samples, n_samples};
  }
};

// Throws Error(Data) naming the first violated invariant.
void validate(const TrialSet& set);

// Number of classes implied by a label vector (max label + 1).
int infer_num_classes(std::span<const int> labels);

TrialSet load_dataset(const std::filesystem::path& manifest_path);

// Writes <dir>/manifest.json and <dir>/data.f32; returns the manifest path.
std::filesystem::path save_dataset(const TrialSet& set, const std::filesystem::path& dir);

}  // namespace btsc
