#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "btsc/features.hpp"
#include "btsc/metrics.hpp"
#include "btsc/trial_io.hpp"

namespace btsc::synth {

enum class Mode { Features, Raw };

/// Ground-truth feature distribution of one channel: one mean and
/// covariance per class.
struct ChannelSpec {
  std::string name;
  FeatureKind kind = FeatureKind::ERP;
  bool informative = false;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
};

struct RawOptions {
  double fs = 1000.0;
  double pre_onset_s = 0.5;
  double post_window_s = 0.5;
  double noise_std = 0.05;
  double carrier_hz = 90.0;  // HGP carrier, inside 65-120 Hz
};

struct SynthSpec {
  int num_classes = 2;
  int trials_per_class = 100;
  int feature_dim = 15;
  Mode mode = Mode::Features;
  std::uint64_t seed = 0;
  std::vector<ChannelSpec> channels;
  RawOptions raw;

  double window_s() const { return static_cast<double>(feature_dim) / kFeatureRateHz; }
};

// Class I mean is `base + I * shift` on `shifted_features` (all when empty)
// and `base` elsewhere; every class shares covariance variance * rho^|i-j|.
ChannelSpec make_channel(std::string name, FeatureKind kind, int num_classes, int dim, double shift,
                         std::vector<int> shifted_features = {}, double variance = 1.0, double rho = 0.0,
                         double base = 0.0);

void validate(const SynthSpec& spec);

SynthSpec spec_from_json(const nlohmann::json& doc);
SynthSpec load_spec(const std::filesystem::path& path);

// Labels are interleaved (trial t has class t % K). Each (channel, trial)
// draws from its own generator seeded by derive_seed(seed, c * n_trials + t).
FeatureBank generate_features(const SynthSpec& spec);

// Time-domain trials whose ERP and HGP features approximate the target
// distributions: ERP channels carry a smooth sub-7 Hz waveform through the
// drawn feature values; HGP channels carry a carrier whose per-window
// amplitude realizes the drawn log power. White noise is added throughout.
TrialSet generate_raw(const SynthSpec& spec);

// Either representation as a TrialSet, according to spec.mode.
TrialSet generate_dataset(const SynthSpec& spec);

struct BayesAccuracy {
  double estimate = 0.0;
  Interval ci;  // 95% binomial interval
  std::size_t n = 0;
};

// Monte Carlo accuracy of the decision rule that knows the true class
// densities of every channel (uniform prior).
BayesAccuracy bayes_optimal_accuracy(const SynthSpec& spec, std::size_t n_mc, std::uint64_t seed);

}  // namespace btsc::synth
