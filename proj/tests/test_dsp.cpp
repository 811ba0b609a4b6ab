#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "btsc/dsp.hpp"
#include "btsc/error.hpp"
#include "btsc/features.hpp"
#include "oracles.hpp"

using namespace btsc;

namespace {

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

TrialSet constant_channels(std::vector<std::vector<float>> levels) {
  TrialSet s;
  s.n_trials = 2;
  s.n_channels = levels.size();
  s.n_samples = 8;
  s.fs = 100.0;
  s.labels = {0, 1};
  s.num_classes = 2;
  for (std::size_t c = 0; c < s.n_channels; ++c) s.channel_names.push_back("c" + std::to_string(c));
  s.data.resize(s.n_trials * s.n_channels * s.n_samples);
  for (std::size_t t = 0; t < s.n_trials; ++t) {
    for (std::size_t c = 0; c < s.n_channels; ++c) {
      auto ch = s.channel(t, c);
      for (std::size_t i = 0; i < s.n_samples; ++i) ch[i] = levels[c][i % levels[c].size()];
    }
  }
  return s;
}

}  // namespace

TEST_CASE("demean") {
  const std::vector<double> x{1, 2, 3};
  const auto y = dsp::demean(x);
  CHECK(y == std::vector<double>{-1, 0, 1});

  const std::vector<double> c(50, 7.25);
  for (double v : dsp::demean(c)) CHECK(v == 0.0);

  const std::vector<double> z{-2, 1, 1};
  CHECK(dsp::demean(z) == z);

  const auto noise = white_noise(1000, 1);
  const auto centered = dsp::demean(noise);
  double sum = 0.0;
  for (double v : centered) sum += v;
  CHECK(std::abs(sum / 1000.0) < 1e-12);

  CHECK_THROWS_AS(dsp::demean(std::vector<double>{}), Error);
}

TEST_CASE("filter design: tap counts and gains") {
  const auto lp = dsp::design_lowpass(7.0, 4.0, 1000.0);
  CHECK(lp.taps.size() % 2 == 1);
  CHECK(std::abs(oracle::dtft_magnitude(lp.taps, 0.0, 1000.0) - 1.0) < 1e-3);
  CHECK(oracle::dtft_magnitude(lp.taps, 11.0, 1000.0) < 0.01);

  const auto bp = dsp::design_bandpass(65.0, 120.0, 10.0, 1000.0);
  CHECK(std::abs(oracle::dtft_magnitude(bp.taps, 92.5, 1000.0) - 1.0) < 1e-3);
  CHECK(oracle::dtft_magnitude(bp.taps, 50.0, 1000.0) < 0.01);
  CHECK(oracle::dtft_magnitude(bp.taps, 135.0, 1000.0) < 0.01);
  CHECK(oracle::dtft_magnitude(bp.taps, 0.0, 1000.0) < 0.01);

  const auto bs = dsp::design_bandstop(55.0, 65.0, 4.0, 1000.0);
  CHECK(std::abs(oracle::dtft_magnitude(bs.taps, 0.0, 1000.0) - 1.0) < 0.01);
  CHECK(oracle::dtft_magnitude(bs.taps, 60.0, 1000.0) < 0.01);

  CHECK_THROWS_AS(dsp::design_lowpass(600.0, 4.0, 1000.0), Error);
  CHECK_THROWS_AS(dsp::design_bandpass(120.0, 65.0, 10.0, 1000.0), Error);
}

TEST_CASE("filter_zero_phase keeps a symmetric pulse symmetric") {
  const std::size_t n = 801;
  std::vector<double> pulse(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - 400.0;
    pulse[i] = std::exp(-t * t / (2.0 * 30.0 * 30.0));
  }
  const auto y = filter_zero_phase(erp_lowpass(1000.0), pulse);
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  CHECK(std::abs(static_cast<double>(peak) - 400.0) <= 1.0);
  for (std::size_t k = 1; k < 300; ++k) CHECK(std::abs(y[400 - k] - y[400 + k]) < 1e-9);
}

TEST_CASE("remove_line_noise suppresses a pure 60 Hz tone") {
  const double fs = 1000.0;
  const auto tone = oracle::sinusoid(60.0, fs, 10000);
  const auto out = dsp::remove_line_noise(tone, fs, 60.0, 200.0);
  REQUIRE(out.size() == tone.size());
  const double in_power = oracle::tone_power(tone, 60.0, fs);
  const double out_power = oracle::tone_power(out, 60.0, fs);
  CHECK(10.0 * std::log10(out_power / in_power) <= -20.0);

  for (double h : {120.0, 180.0}) {
    const auto harmonic = oracle::sinusoid(h, fs, 10000, 0.5, 0.3);
    const auto cleaned = dsp::remove_line_noise(harmonic, fs, 60.0, 200.0);
    CHECK(10.0 * std::log10(oracle::tone_power(cleaned, h, fs) / oracle::tone_power(harmonic, h, fs)) <= -20.0);
  }
}

TEST_CASE("remove_line_noise leaves DC and broadband noise") {
  const std::vector<double> dc(4000, 3.0);
  for (double v : dsp::remove_line_noise(dc, 1000.0, 60.0, 200.0)) CHECK(std::abs(v - 3.0) < 1e-6);

  const auto noise = white_noise(20000, 99);
  const auto out = dsp::remove_line_noise(noise, 1000.0, 60.0, 200.0);
  CHECK(oracle::mean_square(out) / oracle::mean_square(noise) >= 0.90);

  CHECK_THROWS_AS(dsp::remove_line_noise(dc, 100.0, 60.0, 200.0), Error);
}

TEST_CASE("decimate") {
  const auto x = white_noise(333, 4);
  CHECK(dsp::decimate(x, 1000.0, 1000.0) == x);

  const auto slow = oracle::sinusoid(5.0, 2000.0, 8000);
  const auto half = dsp::decimate(slow, 2000.0, 1000.0);
  REQUIRE(half.size() == 4000);
  // Amplitude from the one-sided tone power: A = 2 sqrt(P).
  const double amp = 2.0 * std::sqrt(oracle::tone_power(half, 5.0, 1000.0));
  CHECK(std::abs(amp - 1.0) <= 0.01);
  for (std::size_t i = 1000; i < 3000; i += 97) {
    CHECK(std::abs(half[i] - std::sin(2.0 * oracle::kPi * 5.0 * static_cast<double>(i) / 1000.0)) < 0.01);
  }

  const auto fast = oracle::sinusoid(900.0, 2000.0, 8000);
  const auto gone = dsp::decimate(fast, 2000.0, 1000.0);
  CHECK(10.0 * std::log10(oracle::mean_square(gone) / oracle::mean_square(fast)) <= -40.0);

  CHECK(dsp::decimate(x, 1000.0, 300.0).size() == (333 * 300) / 1000);
  CHECK_THROWS_AS(dsp::decimate(x, 1000.0, 0.0), Error);
  CHECK_THROWS_AS(dsp::decimate(x, 1000.0, 2000.0), Error);
}

TEST_CASE("bipolar_rereference") {
  {
    const auto s = constant_channels({{2.5f, -1.0f}, {2.5f, -1.0f}});
    const std::vector<dsp::ChannelPair> pairs{{0, 1}};
    const auto out = dsp::bipolar_rereference(s, pairs);
    CHECK(out.n_channels == 1);
    for (float v : out.data) CHECK(v == 0.0f);
  }
  {
    const auto s = constant_channels({{1.0f}, {0.0f}});
    const std::vector<dsp::ChannelPair> pairs{{0, 1}};
    const auto out = dsp::bipolar_rereference(s, pairs);
    for (float v : out.data) CHECK(v == 1.0f);
    CHECK(out.channel_names == std::vector<std::string>{"c0-c1"});
    CHECK(out.labels == s.labels);
  }
  {
    const auto s = constant_channels({{1.0f}, {2.0f}, {4.0f}});
    const auto pairs = dsp::nearest_neighbor_pairs(3);
    const auto out = dsp::bipolar_rereference(s, pairs);
    CHECK(out.n_channels == 2);
    CHECK(out.channel_names == std::vector<std::string>{"c0-c1", "c1-c2"});
    CHECK(out.channel(1, 1)[3] == -2.0f);
  }
  const auto s = constant_channels({{1.0f}, {2.0f}});
  const std::vector<dsp::ChannelPair> out_of_range{{0, 2}};
  const std::vector<dsp::ChannelPair> self{{1, 1}};
  const std::vector<dsp::ChannelPair> dup{{0, 1}, {0, 1}};
  CHECK_THROWS_AS(dsp::bipolar_rereference(s, out_of_range), Error);
  CHECK_THROWS_AS(dsp::bipolar_rereference(s, self), Error);
  CHECK_THROWS_AS(dsp::bipolar_rereference(s, dup), Error);
}

TEST_CASE("feature counts and times") {
  CHECK(feature_count(1.0) == 15);
  CHECK(feature_count(0.4) == 6);
  for (double w : {0.2, 0.5, 1.0, 1.3}) {
    const auto erp = feature_times(FeatureKind::ERP, w);
    const auto hgp = feature_times(FeatureKind::HGP, w);
    CHECK(erp.size() == hgp.size());
    for (std::size_t i = 0; i < erp.size(); ++i) {
      CHECK(erp[i] > 0.0);
      CHECK(erp[i] <= w + 1e-12);
      CHECK(hgp[i] > 0.0);
      if (i > 0) {
        CHECK(erp[i] > erp[i - 1]);
        CHECK(hgp[i] > hgp[i - 1]);
      }
    }
  }
  const auto t = feature_times(FeatureKind::ERP, 1.0);
  for (std::size_t i = 0; i < 15; ++i) CHECK(t[i] == doctest::Approx(static_cast<double>(i + 1) / 15.0));
}

TEST_CASE("extract_erp: DC, passband and stopband") {
  const double fs = 1000.0;
  const std::size_t onset = 500;
  const std::vector<double> dc(2001, -3.5);
  const auto f = extract_erp(dc, fs, onset, 1.0);
  REQUIRE(f.size() == 15);
  for (double v : f) CHECK(std::abs(v + 3.5) < 1e-3 * 3.5 + 1e-9);

  // Sinusoids phased relative to onset.
  std::vector<double> slow(2001);
  std::vector<double> fast(2001);
  for (std::size_t i = 0; i < slow.size(); ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(onset)) / fs;
    slow[i] = std::sin(2.0 * oracle::kPi * 3.0 * t);
    fast[i] = std::sin(2.0 * oracle::kPi * 30.0 * t);
  }
  const auto s = extract_erp(slow, fs, onset, 1.0);
  const auto times = feature_times(FeatureKind::ERP, 1.0);
  for (std::size_t i = 0; i < 15; ++i) CHECK(std::abs(s[i] - std::sin(2.0 * oracle::kPi * 3.0 * times[i])) <= 0.05);
  for (double v : extract_erp(fast, fs, onset, 1.0)) CHECK(std::abs(v) <= 0.05);
}

TEST_CASE("extract_hgp: in-band tone, silence and out-of-band tone") {
  const double fs = 1000.0;
  const std::size_t onset = 500;
  const auto tone = oracle::sinusoid(90.0, fs, 2001);
  const auto f = extract_hgp(tone, fs, onset, 1.0);
  REQUIRE(f.size() == 15);
  for (double v : f) CHECK(std::abs(v - std::log(0.5)) <= 0.1);

  const std::vector<double> zero(2001, 0.0);
  for (double v : extract_hgp(zero, fs, onset, 1.0)) CHECK(v == doctest::Approx(std::log(kLogPowerFloor)));

  const auto low = oracle::sinusoid(10.0, fs, 2001);
  for (double v : extract_hgp(low, fs, onset, 1.0)) CHECK(v <= std::log(kLogPowerFloor) + 1.0);
}

TEST_CASE("extraction errors") {
  const std::vector<double> x(1000, 0.0);
  CHECK_THROWS_AS(extract_erp(x, 1000.0, 500, 1.0), Error);
  CHECK_THROWS_AS(extract_hgp(x, 1000.0, 500, 1.0), Error);
  CHECK_THROWS_AS(extract_hgp(x, 200.0, 0, 1.0), Error);
  CHECK_NOTHROW(extract_erp(x, 1000.0, 0, 0.9));
}

TEST_CASE("property: amplitude scaling") {
  const double fs = 1000.0;
  const auto base = white_noise(1600, 23);
  for (double alpha : {2.0, 0.25, -4.0}) {
    std::vector<double> scaled(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) scaled[i] = alpha * base[i];
    const auto e0 = extract_erp(base, fs, 300, 1.0);
    const auto e1 = extract_erp(scaled, fs, 300, 1.0);
    // Power-of-two factors scale every intermediate exactly.
    for (std::size_t i = 0; i < e0.size(); ++i) CHECK(e1[i] == alpha * e0[i]);
    const auto h0 = extract_hgp(base, fs, 300, 1.0);
    const auto h1 = extract_hgp(scaled, fs, 300, 1.0);
    for (std::size_t i = 0; i < h0.size(); ++i) CHECK(std::abs(h1[i] - h0[i] - 2.0 * std::log(std::abs(alpha))) < 1e-9);
  }
  const double alpha = 1.7;
  std::vector<double> scaled(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) scaled[i] = alpha * base[i];
  const auto e0 = extract_erp(base, fs, 300, 1.0);
  const auto e1 = extract_erp(scaled, fs, 300, 1.0);
  for (std::size_t i = 0; i < e0.size(); ++i) CHECK(e1[i] == doctest::Approx(alpha * e0[i]).epsilon(1e-12));
}

TEST_CASE("featurize over a TrialSet") {
  TrialSet s;
  s.n_trials = 4;
  s.n_channels = 2;
  s.n_samples = 1200;
  s.fs = 1000.0;
  s.t0_index = 100;
  s.labels = {0, 1, 0, 1};
  s.num_classes = 2;
  s.channel_names = {"a", "b"};
  s.data.assign(s.n_trials * s.n_channels * s.n_samples, 1.0f);
  const auto bank = featurize(s, 1.0, true, true);
  CHECK(bank.blocks.size() == 4);
  CHECK(bank.dim() == 15);
  CHECK(bank.n_trials() == 4);
  CHECK(bank.blocks[0].kind == FeatureKind::ERP);
  CHECK(bank.blocks[0].values(2, 4) == doctest::Approx(1.0).epsilon(1e-3));
  const auto erp_only = featurize(s, 0.5, true, false);
  CHECK(erp_only.blocks.size() == 2);
  CHECK(erp_only.dim() == 8);
  CHECK_THROWS_AS(featurize(s, 1.2, true, false), Error);
}
