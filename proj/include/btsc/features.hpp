#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "btsc/dsp.hpp"
#include "btsc/trial_io.hpp"
#include "btsc/types.hpp"

namespace btsc {

// Feature rate of the ERP down-sampling grid, also the HGP window count per second.
inline constexpr double kFeatureRateHz = 15.0;
inline constexpr double kErpCutoffHz = 7.0;
inline constexpr double kErpTransitionHz = 4.0;
inline constexpr double kHgpLowHz = 65.0;
inline constexpr double kHgpHighHz = 120.0;
inline constexpr double kHgpTransitionHz = 10.0;
inline constexpr double kHgpMinFs = 240.0;
inline constexpr double kLogPowerFloor = 1e-12;

// d = round(15 * window_s), identical for ERP and HGP.
std::size_t feature_count(double window_s);

// ERP: sample times (i+1) * window_s / d. HGP: window centers.
std::vector<double> feature_times(FeatureKind kind, double window_s);

dsp::FilterKernel erp_lowpass(double fs);
dsp::FilterKernel hgp_bandpass(double fs);

std::vector<double> extract_erp(std::span<const double> signal, double fs, std::size_t onset,
                                double window_s);
std::vector<double> extract_erp(const dsp::FilterKernel& lowpass, std::span<const double> signal,
                                std::size_t onset, double window_s);

std::vector<double> extract_hgp(std::span<const double> signal, double fs, std::size_t onset,
                                double window_s);
std::vector<double> extract_hgp(const dsp::FilterKernel& bandpass, std::span<const double> signal,
                                std::size_t onset, double window_s);

/// One candidate feature time series: n_trials x d values for a
/// (channel, kind) pair.
struct FeatureBlock {
  std::string channel;
  FeatureKind kind = FeatureKind::ERP;
  Eigen::MatrixXd values;
  std::vector<double> times_s;
};

/// Every candidate feature block of a dataset plus trial labels.
struct FeatureBank {
  std::vector<FeatureBlock> blocks;
  std::vector<int> labels;
  int num_classes = 0;
  double window_s = 0.0;

  std::size_t n_trials() const { return labels.size(); }
  std::size_t dim() const { return blocks.empty() ? 0 : static_cast<std::size_t>(blocks.front().values.cols()); }

  // Keeps the first `horizon` features of every block.
  FeatureBank truncated(std::size_t horizon) const;
  FeatureBank rows(std::span<const std::size_t> trial_indices) const;
};

void validate(const FeatureBank& bank);

// ERP and/or HGP features for every channel, taken from t0_index onward.
FeatureBank featurize(const TrialSet& set, double window_s, bool erp, bool hgp);

// Feature-content TrialSets convert losslessly up to float32 rounding.
FeatureBank bank_from_feature_set(const TrialSet& set);
TrialSet feature_set_from_bank(const FeatureBank& bank);

// Columns: trial,channel,kind,feature_index,time_s,value
void write_features_csv(const FeatureBank& bank, std::ostream& out);

}  // namespace btsc
