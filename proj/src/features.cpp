#include "btsc/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "btsc/error.hpp"

namespace btsc {

namespace {

std::vector<double> to_double(std::span<const float> samples) {
  return {samples.begin(), samples.end()};
}

void check_window(std::size_t n, std::size_t onset, double window_s, double fs) {
  if (!(window_s > 0.0)) throw_data("feature window must be positive");
  if (feature_count(window_s) == 0) throw_data("feature window shorter than one feature step");
  if (onset >= n) throw_data("onset index beyond end of trial");
  const double available = static_cast<double>(n - onset);
  if (available + 1e-9 < window_s * fs) throw_data("window too long for trial");
}

}  // namespace

std::size_t feature_count(double window_s) {
  return static_cast<std::size_t>(std::llround(kFeatureRateHz * window_s));
}

std::vector<double> feature_times(FeatureKind kind, double window_s) {
  const std::size_t d = feature_count(window_s);
  std::vector<double> times(d);
  const double step = window_s / static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    times[i] = kind == FeatureKind::ERP ? static_cast<double>(i + 1) * step
                                        : (static_cast<double>(i) + 0.5) * step;
  }
  return times;
}

dsp::FilterKernel erp_lowpass(double fs) {
  return dsp::design_lowpass(kErpCutoffHz, kErpTransitionHz, fs);
}

dsp::FilterKernel hgp_bandpass(double fs) {
  if (fs < kHgpMinFs) throw_data("HGP extraction requires fs >= 240 Hz");
  return dsp::design_bandpass(kHgpLowHz, kHgpHighHz, kHgpTransitionHz, fs);
}

std::vector<double> extract_erp(std::span<const double> signal, double fs, std::size_t onset,
                                double window_s) {
  check_window(signal.size(), onset, window_s, fs);
  return extract_erp(erp_lowpass(fs), signal, onset, window_s);
}

std::vector<double> extract_erp(const dsp::FilterKernel& lowpass, std::span<const double> signal,
                                std::size_t onset, double window_s) {
  const double fs = lowpass.design_fs;
  check_window(signal.size(), onset, window_s, fs);
  const auto filtered = dsp::filter_zero_phase(lowpass, signal);
  const auto times = feature_times(FeatureKind::ERP, window_s);
  const double last = static_cast<double>(signal.size() - 1);
  std::vector<double> features(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double pos = std::min(static_cast<double>(onset) + times[i] * fs, last);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, signal.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    features[i] = frac == 0.0 ? filtered[lo] : (1.0 - frac) * filtered[lo] + frac * filtered[hi];
  }
  return features;
}

std::vector<double> extract_hgp(std::span<const double> signal, double fs, std::size_t onset,
                                double window_s) {
  if (fs < kHgpMinFs) throw_data("HGP extraction requires fs >= 240 Hz");
  check_window(signal.size(), onset, window_s, fs);
  return extract_hgp(hgp_bandpass(fs), signal, onset, window_s);
}

std::vector<double> extract_hgp(const dsp::FilterKernel& bandpass, std::span<const double> signal,
                                std::size_t onset, double window_s) {
  const double fs = bandpass.design_fs;
  if (fs < kHgpMinFs) throw_data("HGP extraction requires fs >= 240 Hz");
  check_window(signal.size(), onset, window_s, fs);
  const auto filtered = dsp::filter_zero_phase(bandpass, signal);
  const std::size_t d = feature_count(window_s);
  std::vector<double> features(d);
  auto boundary = [&](std::size_t i) {
    const double pos = static_cast<double>(i) * window_s * fs / static_cast<double>(d);
    return std::min(onset + static_cast<std::size_t>(std::llround(pos)), signal.size());
  };
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t begin = boundary(i);
    const std::size_t end = boundary(i + 1);
    if (end <= begin) throw_data("HGP window holds no samples; sampling rate too low");
    double power = 0.0;
    for (std::size_t s = begin; s < end; ++s) power += filtered[s] * filtered[s];
    power /= static_cast<double>(end - begin);
    features[i] = std::log(std::max(power, kLogPowerFloor));
  }
  return features;
}

FeatureBank FeatureBank::truncated(std::size_t horizon) const {
  if (horizon < 1 || horizon > dim()) throw_data("horizon out of range");
  FeatureBank out;
  out.labels = labels;
  out.num_classes = num_classes;
  out.window_s = window_s * static_cast<double>(horizon) / static_cast<double>(dim());
  out.blocks.reserve(blocks.size());
  for (const auto& block : blocks) {
    FeatureBlock b;
    b.channel = block.channel;
    b.kind = block.kind;
    b.values = block.values.leftCols(static_cast<Eigen::Index>(horizon));
    b.times_s.assign(block.times_s.begin(), block.times_s.begin() + static_cast<std::ptrdiff_t>(horizon));
    out.blocks.push_back(std::move(b));
  }
  return out;
}

FeatureBank FeatureBank::rows(std::span<const std::size_t> trial_indices) const {
  FeatureBank out;
  out.num_classes = num_classes;
  out.window_s = window_s;
  out.labels.reserve(trial_indices.size());
  for (auto t : trial_indices) out.labels.push_back(labels.at(t));
  for (const auto& block : blocks) {
    FeatureBlock b;
    b.channel = block.channel;
    b.kind = block.kind;
    b.times_s = block.times_s;
    b.values.resize(static_cast<Eigen::Index>(trial_indices.size()), block.values.cols());
    for (std::size_t r = 0; r < trial_indices.size(); ++r) {
      b.values.row(static_cast<Eigen::Index>(r)) = block.values.row(static_cast<Eigen::Index>(trial_indices[r]));
    }
    out.blocks.push_back(std::move(b));
  }
  return out;
}

void validate(const FeatureBank& bank) {
  if (bank.blocks.empty()) throw_data("feature bank has no candidate blocks");
  if (bank.labels.empty()) throw_data("empty dataset");
  if (bank.num_classes < 1) throw_data("num_classes must be at least 1");
  const auto d = bank.blocks.front().values.cols();
  if (d < 1) throw_data("feature blocks must have at least one feature");
  for (const auto& block : bank.blocks) {
    if (static_cast<std::size_t>(block.values.rows()) != bank.labels.size()) {
      throw_data("feature block '" + block.channel + "' row count does not match labels");
    }
    if (block.values.cols() != d) throw_data("feature blocks differ in length");
    if (!block.values.allFinite()) throw_data("non-finite feature in block '" + block.channel + "'");
  }
  for (int label : bank.labels) {
    if (label < 0 || label >= bank.num_classes) throw_data("label out of range: " + std::to_string(label));
  }
}

FeatureBank featurize(const TrialSet& set, double window_s, bool erp, bool hgp) {
  if (set.content != DataContent::Raw) throw_data("featurize expects a raw recording");
  if (!erp && !hgp) throw_data("at least one of ERP or HGP features must be enabled");
  FeatureBank bank;
  bank.labels = set.labels;
  bank.num_classes = set.num_classes;
  bank.window_s = window_s;
  const std::size_t d = feature_count(window_s);
  check_window(set.n_samples, set.t0_index, window_s, set.fs);

  std::optional<dsp::FilterKernel> lowpass;
  std::optional<dsp::FilterKernel> bandpass;
  if (erp) lowpass = erp_lowpass(set.fs);
  if (hgp) bandpass = hgp_bandpass(set.fs);

  const auto n = static_cast<Eigen::Index>(set.n_trials);
  for (std::size_t c = 0; c < set.n_channels; ++c) {
    FeatureBlock erp_block{set.channel_names[c], FeatureKind::ERP, Eigen::MatrixXd(n, static_cast<Eigen::Index>(d)),
                           feature_times(FeatureKind::ERP, window_s)};
    FeatureBlock hgp_block{set.channel_names[c], FeatureKind::HGP, Eigen::MatrixXd(n, static_cast<Eigen::Index>(d)),
                           feature_times(FeatureKind::HGP, window_s)};
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      const auto signal = to_double(set.channel(t, c));
      const auto row = static_cast<Eigen::Index>(t);
      if (erp) {
        const auto f = extract_erp(*lowpass, signal, set.t0_index, window_s);
        erp_block.values.row(row) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(d));
      }
      if (hgp) {
        const auto f = extract_hgp(*bandpass, signal, set.t0_index, window_s);
        hgp_block.values.row(row) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(d));
      }
    }
    if (erp) bank.blocks.push_back(std::move(erp_block));
    if (hgp) bank.blocks.push_back(std::move(hgp_block));
  }
  return bank;
}

FeatureBank bank_from_feature_set(const TrialSet& set) {
  if (set.content != DataContent::Features) throw_data("dataset does not hold feature vectors");
  FeatureBank bank;
  bank.labels = set.labels;
  bank.num_classes = set.num_classes;
  bank.window_s = set.window_s;
  const auto n = static_cast<Eigen::Index>(set.n_trials);
  const auto d = static_cast<Eigen::Index>(set.n_samples);
  const double step = set.window_s / static_cast<double>(d);
  for (std::size_t c = 0; c < set.n_channels; ++c) {
    FeatureBlock block;
    block.channel = set.channel_names[c];
    block.kind = set.feature_kinds[c];
    block.values.resize(n, d);
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      const auto samples = set.channel(t, c);
      for (Eigen::Index i = 0; i < d; ++i) {
        block.values(static_cast<Eigen::Index>(t), i) = samples[static_cast<std::size_t>(i)];
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      block.times_s.push_back(block.kind == FeatureKind::ERP ? static_cast<double>(i + 1) * step
                                                             : (static_cast<double>(i) + 0.5) * step);
    }
    bank.blocks.push_back(std::move(block));
  }
  return bank;
}

TrialSet feature_set_from_bank(const FeatureBank& bank) {
  validate(bank);
  TrialSet set;
  set.content = DataContent::Features;
  set.n_trials = bank.n_trials();
  set.n_channels = bank.blocks.size();
  set.n_samples = bank.dim();
  set.window_s = bank.window_s;
  set.fs = static_cast<double>(set.n_samples) / bank.window_s;
  set.t0_index = 0;
  set.labels = bank.labels;
  set.num_classes = bank.num_classes;
  set.data.resize(set.n_trials * set.n_channels * set.n_samples);
  for (std::size_t c = 0; c < set.n_channels; ++c) {
    const auto& block = bank.blocks[c];
    set.channel_names.push_back(block.channel);
    set.feature_kinds.push_back(block.kind);
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      auto dst = set.channel(t, c);
      for (std::size_t i = 0; i < set.n_samples; ++i) {
        dst[i] = static_cast<float>(block.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
      }
    }
  }
  return set;
}

void write_features_csv(const FeatureBank& bank, std::ostream& out) {
  out << "trial,channel,kind,feature_index,time_s,value\n";
  const auto old_precision = out.precision(17);
  for (std::size_t t = 0; t < bank.n_trials(); ++t) {
    for (const auto& block : bank.blocks) {
      for (Eigen::Index i = 0; i < block.values.cols(); ++i) {
        out << t << ',' << block.channel << ',' << to_string(block.kind) << ',' << i << ','
            << block.times_s[static_cast<std::size_t>(i)] << ','
            << block.values(static_cast<Eigen::Index>(t), i) << '\n';
      }
    }
  }
  out.precision(old_precision);
}

}  // namespace btsc
