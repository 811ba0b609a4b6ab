#include "btsc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <set>

#include "btsc/error.hpp"

namespace btsc::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Windowed ideal lowpass, unnormalized. cutoff >= fs/2 yields a unit impulse.
std::vector<double> windowed_sinc(double cutoff_hz, double fs, std::size_t taps) {
  std::vector<double> h(taps);
  const double fc = std::min(cutoff_hz / fs, 0.5);
  const double m = static_cast<double>(taps - 1);
  for (std::size_t n = 0; n < taps; ++n) {
    const double t = static_cast<double>(n) - m / 2.0;
    const double window = taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / m);
    h[n] = 2.0 * fc * sinc(2.0 * fc * t) * window;
  }
  return h;
}

double magnitude_at(std::span<const double> taps, double freq_hz, double fs) {
  std::complex<double> acc{0.0, 0.0};
  const double w = 2.0 * kPi * freq_hz / fs;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    acc += taps[n] * std::polar(1.0, -w * static_cast<double>(n));
  }
  return std::abs(acc);
}

void check_design(double fs, double transition_hz) {
  if (!(fs > 0.0)) throw_data("filter design requires fs > 0");
  if (!(transition_hz > 0.0)) throw_data("filter design requires a positive transition width");
}

void causal_fir(std::span<const double> taps, std::span<const double> in, std::span<double> out) {
  const std::size_t n_taps = taps.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t kmax = std::min(n_taps - 1, i);
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) acc += taps[k] * in[i - k];
    out[i] = acc;
  }
}

}  // namespace

std::size_t hamming_taps(double transition_hz, double fs) {
  auto taps = static_cast<std::size_t>(std::ceil(3.3 * fs / transition_hz));
  if (taps % 2 == 0) ++taps;
  return std::max<std::size_t>(taps, 3);
}

FilterKernel design_lowpass(double cutoff_hz, double transition_hz, double fs) {
  check_design(fs, transition_hz);
  if (!(cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0) throw_data("lowpass cutoff must lie in (0, fs/2)");
  FilterKernel kernel;
  kernel.kind = FilterKind::Lowpass;
  kernel.hi_hz = cutoff_hz;
  kernel.design_fs = fs;
  kernel.taps = windowed_sinc(cutoff_hz, fs, hamming_taps(transition_hz, fs));
  const double dc = std::accumulate(kernel.taps.begin(), kernel.taps.end(), 0.0);
  for (double& t : kernel.taps) t /= dc;
  return kernel;
}

FilterKernel design_bandpass(double lo_hz, double hi_hz, double transition_hz, double fs) {
  check_design(fs, transition_hz);
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || lo_hz >= fs / 2.0) {
    throw_data("bandpass edges must satisfy 0 < lo < hi, lo < fs/2");
  }
  const std::size_t taps = hamming_taps(transition_hz, fs);
  FilterKernel kernel;
  kernel.kind = FilterKind::Bandpass;
  kernel.lo_hz = lo_hz;
  kernel.hi_hz = hi_hz;
  kernel.design_fs = fs;
  const auto upper = windowed_sinc(hi_hz, fs, taps);
  const auto lower = windowed_sinc(lo_hz, fs, taps);
  kernel.taps.resize(taps);
  for (std::size_t n = 0; n < taps; ++n) kernel.taps[n] = upper[n] - lower[n];
  // Unit gain at band center.
  const double center = 0.5 * (lo_hz + std::min(hi_hz, fs / 2.0));
  const double gain = magnitude_at(kernel.taps, center, fs);
  if (!(gain > 0.0)) throw_numerical("bandpass design has zero gain at band center");
  for (double& t : kernel.taps) t /= gain;
  return kernel;
}

FilterKernel design_bandstop(double lo_hz, double hi_hz, double transition_hz, double fs) {
  FilterKernel kernel = design_bandpass(lo_hz, hi_hz, transition_hz, fs);
  kernel.kind = FilterKind::Bandstop;
  for (double& t : kernel.taps) t = -t;
  kernel.taps[kernel.taps.size() / 2] += 1.0;
  return kernel;
}

std::vector<double> filter_zero_phase(const FilterKernel& kernel, std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(3 * kernel.taps.size(), n - 1);

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * signal[0] - signal[pad - i];
    ext[pad + n + i] = 2.0 * signal[n - 1] - signal[n - 2 - i];
  }
  std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  std::vector<double> forward(ext.size());
  causal_fir(kernel.taps, ext, forward);
  std::reverse(forward.begin(), forward.end());
  std::vector<double> backward(ext.size());
  causal_fir(kernel.taps, forward, backward);
  std::reverse(backward.begin(), backward.end());

  return {backward.begin() + static_cast<std::ptrdiff_t>(pad),
          backward.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> demean(std::span<const double> signal) {
  if (signal.empty()) throw_data("demean of empty signal");
  const double mean =
      std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(signal.size());
  std::vector<double> out(signal.begin(), signal.end());
  for (double& v : out) v -= mean;
  return out;
}

std::vector<double> remove_line_noise(std::span<const double> signal, double fs, double line_hz,
                                      double max_harmonic_hz) {
  if (!(line_hz > 0.0) || line_hz >= fs / 2.0) throw_data("line frequency must lie in (0, fs/2)");
  if (!(fs > 2.0 * max_harmonic_hz)) throw_data("fs must exceed twice the highest line harmonic");
  constexpr double kHalfWidthHz = 1.0;
  std::vector<double> out(signal.begin(), signal.end());
  for (double f = line_hz; f <= max_harmonic_hz + 1e-9; f += line_hz) {
    const FilterKernel band = design_bandpass(f - kHalfWidthHz, f + kHalfWidthHz, 2.0 * kHalfWidthHz, fs);
    const auto line = filter_zero_phase(band, signal);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= line[i];
  }
  return out;
}

std::vector<double> decimate(std::span<const double> signal, double fs_in, double fs_out) {
  if (!(fs_out > 0.0)) throw_data("decimate requires fs_out > 0");
  if (fs_in < fs_out) throw_data("decimate requires fs_in >= fs_out");
  if (fs_in == fs_out) return {signal.begin(), signal.end()};

  const FilterKernel aa = design_lowpass(0.45 * fs_out, 0.05 * fs_out, fs_in);
  const auto filtered = filter_zero_phase(aa, signal);
  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(signal.size()) * fs_out / fs_in));
  std::vector<double> out(out_len);
  const double ratio = fs_in / fs_out;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) < 1e-12) {
    const auto step = static_cast<std::size_t>(rounded);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = filtered[i * step];
  } else {
    for (std::size_t i = 0; i < out_len; ++i) {
      const double pos = static_cast<double>(i) * ratio;
      const auto lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, filtered.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      out[i] = (1.0 - frac) * filtered[lo] + frac * filtered[hi];
    }
  }
  return out;
}

TrialSet bipolar_rereference(const TrialSet& set, std::span<const ChannelPair> pairs) {
  if (set.content != DataContent::Raw) throw_data("bipolar re-referencing applies to raw recordings");
  if (pairs.empty()) throw_data("bipolar re-referencing needs at least one pair");
  std::set<ChannelPair> seen;
  for (const auto& [anode, cathode] : pairs) {
    if (anode >= set.n_channels || cathode >= set.n_channels) {
      throw_data("bipolar pair index out of range");
    }
    if (anode == cathode) throw_data("bipolar pair uses the same channel twice");
    if (!seen.insert({anode, cathode}).second) throw_data("duplicate bipolar pair");
  }

  TrialSet out = set;
  out.n_channels = pairs.size();
  out.channel_names.clear();
  out.data.assign(set.n_trials * out.n_channels * set.n_samples, 0.0f);
  for (const auto& [anode, cathode] : pairs) {
    out.channel_names.push_back(set.channel_names[anode] + "-" + set.channel_names[cathode]);
  }
  for (std::size_t t = 0; t < set.n_trials; ++t) {
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const auto a = set.channel(t, pairs[j].first);
      const auto c = set.channel(t, pairs[j].second);
      auto dst = out.channel(t, j);
      for (std::size_t s = 0; s < set.n_samples; ++s) dst[s] = a[s] - c[s];
    }
  }
  return out;
}

std::vector<ChannelPair> nearest_neighbor_pairs(std::size_t n_channels) {
  std::vector<ChannelPair> pairs;
  for (std::size_t c = 0; c + 1 < n_channels; ++c) pairs.emplace_back(c, c + 1);
  return pairs;
}

}  // namespace btsc::dsp
