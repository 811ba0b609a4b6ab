#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "btsc/trial_io.hpp"

namespace btsc::dsp {

enum class FilterKind { Lowpass, Bandpass, Bandstop };

/// Linear-phase FIR kernel (Hamming-windowed sinc, odd length).
struct FilterKernel {
  std::vector<double> taps;
  FilterKind kind = FilterKind::Lowpass;
  double lo_hz = 0.0;  // unused for lowpass
  double hi_hz = 0.0;  // cutoff for lowpass
  double design_fs = 0.0;
};

// Tap count for a Hamming-windowed sinc with the given transition width,
// rounded up to odd length.
std::size_t hamming_taps(double transition_hz, double fs);

FilterKernel design_lowpass(double cutoff_hz, double transition_hz, double fs);
FilterKernel design_bandpass(double lo_hz, double hi_hz, double transition_hz, double fs);
FilterKernel design_bandstop(double lo_hz, double hi_hz, double transition_hz, double fs);

// Filters forward then backward (zero phase, squared magnitude response).
// The ends are padded by odd reflection so constants and linear trends pass
// through without edge transients.
std::vector<double> filter_zero_phase(const FilterKernel& kernel, std::span<const double> signal);

std::vector<double> demean(std::span<const double> signal);

// Subtracts a +/-1 Hz band-passed copy of the signal around every harmonic
// of line_hz up to max_harmonic_hz.
std::vector<double> remove_line_noise(std::span<const double> signal, double fs, double line_hz,
                                      double max_harmonic_hz);

// Anti-alias lowpass at 0.45 * fs_out, then resample. Integer ratios keep
// every r-th sample; other ratios interpolate linearly.
std::vector<double> decimate(std::span<const double> signal, double fs_in, double fs_out);

using ChannelPair = std::pair<std::size_t, std::size_t>;

TrialSet bipolar_rereference(const TrialSet& set, std::span<const ChannelPair> pairs);

// Pairs each channel with its successor: (0,1), (1,2), ...
std::vector<ChannelPair> nearest_neighbor_pairs(std::size_t n_channels);

}  // namespace btsc::dsp
