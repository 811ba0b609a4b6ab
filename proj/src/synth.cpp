#include "btsc/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "btsc/cv.hpp"
#include "btsc/error.hpp"

namespace btsc::synth {

using nlohmann::json;

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& cov, const std::string& where) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw_data("covariance of " + where + " is not positive definite");
  return llt.matrixL();
}

std::vector<std::vector<Eigen::MatrixXd>> factor_all(const SynthSpec& spec) {
  std::vector<std::vector<Eigen::MatrixXd>> factors;
  for (const auto& ch : spec.channels) {
    auto& per_class = factors.emplace_back();
    for (int c = 0; c < spec.num_classes; ++c) {
      per_class.push_back(cholesky_or_throw(ch.covs[static_cast<std::size_t>(c)], "channel " + ch.name));
    }
  }
  return factors;
}

Eigen::VectorXd draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& lower, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return mean + lower * z;
}

// Catmull-Rom interpolation through (knot_t[i], knot_v[i]); zero outside.
double spline_at(const std::vector<double>& knot_t, const std::vector<double>& knot_v, double t) {
  if (t <= knot_t.front() || t >= knot_t.back()) return 0.0;
  std::size_t i = 0;
  while (t > knot_t[i + 1]) ++i;
  auto v = [&](std::ptrdiff_t k) {
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(knot_v.size())) return 0.0;
    return knot_v[static_cast<std::size_t>(k)];
  };
  const auto k = static_cast<std::ptrdiff_t>(i);
  const double u = (t - knot_t[i]) / (knot_t[i + 1] - knot_t[i]);
  const double p0 = v(k - 1), p1 = v(k), p2 = v(k + 1), p3 = v(k + 2);
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
}

Eigen::MatrixXd ar1_cov(int dim, double variance, double rho) {
  Eigen::MatrixXd cov(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) cov(i, j) = variance * std::pow(rho, std::abs(i - j));
  }
  return cov;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != m.cols()) throw_data("ragged covariance matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

ChannelSpec channel_from_json(const json& j, int num_classes, int dim) {
  const auto name = j.at("name").get<std::string>();
  const auto kind = parse_feature_kind(j.value("kind", std::string("ERP")));
  ChannelSpec ch;
  if (j.contains("means")) {
    ch.name = name;
    ch.kind = kind;
    for (const auto& m : j.at("means")) ch.means.push_back(vector_from_json(m));
    if (j.contains("covariances")) {
      for (const auto& c : j.at("covariances")) ch.covs.push_back(matrix_from_json(c));
    } else {
      const auto cov = ar1_cov(dim, j.value("variance", 1.0), j.value("ar1_rho", 0.0));
      ch.covs.assign(static_cast<std::size_t>(num_classes), cov);
    }
    bool differs = false;
    for (std::size_t c = 1; c < ch.means.size(); ++c) {
      differs = differs || ch.means[c] != ch.means[0] ||
                (c < ch.covs.size() && ch.covs[c] != ch.covs[0]);
    }
    ch.informative = j.value("informative", differs);
  } else {
    ch = make_channel(name, kind, num_classes, dim, j.value("mean_shift", 0.0),
                      j.value("shift_features", std::vector<int>{}), j.value("variance", 1.0),
                      j.value("ar1_rho", 0.0), j.value("base_mean", 0.0));
    if (j.contains("informative")) ch.informative = j.at("informative").get<bool>();
  }
  return ch;
}

}  // namespace

ChannelSpec make_channel(std::string name, FeatureKind kind, int num_classes, int dim, double shift,
                         std::vector<int> shifted_features, double variance, double rho, double base) {
  ChannelSpec ch;
  ch.name = std::move(name);
  ch.kind = kind;
  ch.informative = shift != 0.0 && num_classes > 1;
  if (shifted_features.empty()) {
    for (int i = 0; i < dim; ++i) shifted_features.push_back(i);
  }
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(dim, base);
    for (int f : shifted_features) {
      if (f < 0 || f >= dim) throw_data("shifted feature index out of range");
      mean(f) += c * shift;
    }
    ch.means.push_back(std::move(mean));
    ch.covs.push_back(ar1_cov(dim, variance, rho));
  }
  return ch;
}

void validate(const SynthSpec& spec) {
  if (spec.num_classes < 1) throw_data("synth spec needs at least one class");
  if (spec.trials_per_class < 2) throw_data("synth spec needs at least 2 trials per class");
  if (spec.feature_dim < 1) throw_data("synth spec needs feature_dim >= 1");
  if (spec.channels.empty()) throw_data("synth spec needs at least one channel");
  for (const auto& ch : spec.channels) {
    if (ch.means.size() != static_cast<std::size_t>(spec.num_classes) ||
        ch.covs.size() != static_cast<std::size_t>(spec.num_classes)) {
      throw_data("channel " + ch.name + " needs one mean and covariance per class");
    }
    for (int c = 0; c < spec.num_classes; ++c) {
      const auto& m = ch.means[static_cast<std::size_t>(c)];
      const auto& s = ch.covs[static_cast<std::size_t>(c)];
      if (m.size() != spec.feature_dim || s.rows() != spec.feature_dim || s.cols() != spec.feature_dim) {
        throw_data("channel " + ch.name + " parameters do not match feature_dim");
      }
      if (!m.allFinite() || !s.allFinite()) throw_data("channel " + ch.name + " has non-finite parameters");
      if (!s.isApprox(s.transpose())) throw_data("covariance of channel " + ch.name + " is not symmetric");
      cholesky_or_throw(s, "channel " + ch.name);
      if (!ch.informative && (m != ch.means[0] || s != ch.covs[0])) {
        throw_data("channel " + ch.name + " is marked non-informative but its class parameters differ");
      }
    }
  }
  if (spec.mode == Mode::Raw) {
    const auto& r = spec.raw;
    if (!(r.fs > 2.0 * kErpCutoffHz)) throw_data("raw synthesis needs fs above 14 Hz");
    for (const auto& ch : spec.channels) {
      if (ch.kind == FeatureKind::HGP && r.fs < kHgpMinFs) throw_data("raw HGP synthesis needs fs >= 240 Hz");
    }
    if (r.pre_onset_s < 0.0 || r.post_window_s < 0.0 || r.noise_std < 0.0) {
      throw_data("raw synthesis durations and noise must be non-negative");
    }
    if (!(r.carrier_hz > kHgpLowHz && r.carrier_hz < kHgpHighHz && r.carrier_hz < r.fs / 2.0)) {
      throw_data("HGP carrier must lie inside the 65-120 Hz band and below Nyquist");
    }
  }
}

SynthSpec spec_from_json(const json& doc) {
  try {
    SynthSpec spec;
    const auto mode = doc.value("mode", std::string("features"));
    if (mode == "features" || mode == "feature") {
      spec.mode = Mode::Features;
    } else if (mode == "raw") {
      spec.mode = Mode::Raw;
    } else {
      throw_data("unknown synth mode '" + mode + "'");
    }
    spec.num_classes = doc.at("num_classes").get<int>();
    spec.trials_per_class = doc.at("trials_per_class").get<int>();
    spec.feature_dim = doc.contains("feature_dim")
                           ? doc.at("feature_dim").get<int>()
                           : static_cast<int>(feature_count(doc.value("window_s", 1.0)));
    spec.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("raw")) {
      const auto& r = doc.at("raw");
      spec.raw.fs = r.value("fs", spec.raw.fs);
      spec.raw.pre_onset_s = r.value("pre_onset_s", spec.raw.pre_onset_s);
      spec.raw.post_window_s = r.value("post_window_s", spec.raw.post_window_s);
      spec.raw.noise_std = r.value("noise_std", spec.raw.noise_std);
      spec.raw.carrier_hz = r.value("carrier_hz", spec.raw.carrier_hz);
    }
    for (const auto& ch : doc.value("channels", json::array())) {
      spec.channels.push_back(channel_from_json(ch, spec.num_classes, spec.feature_dim));
    }
    if (doc.contains("noise_channels")) {
      const auto& n = doc.at("noise_channels");
      const int count = n.at("count").get<int>();
      const auto kind = parse_feature_kind(n.value("kind", std::string("ERP")));
      const auto prefix = n.value("prefix", std::string("noise"));
      for (int i = 0; i < count; ++i) {
        spec.channels.push_back(make_channel(prefix + std::to_string(i), kind, spec.num_classes, spec.feature_dim,
                                             0.0, {}, n.value("variance", 1.0), n.value("ar1_rho", 0.0)));
      }
    }
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw_data(std::string("malformed synth spec: ") + e.what());
  }
}

SynthSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("synth spec not found: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw_io("synth spec is not valid JSON: " + std::string(e.what()));
  }
  return spec_from_json(doc);
}

FeatureBank generate_features(const SynthSpec& spec) {
  validate(spec);
  const auto factors = factor_all(spec);
  const std::size_t n = static_cast<std::size_t>(spec.num_classes) * static_cast<std::size_t>(spec.trials_per_class);
  FeatureBank bank;
  bank.num_classes = spec.num_classes;
  bank.window_s = spec.window_s();
  for (std::size_t t = 0; t < n; ++t) bank.labels.push_back(static_cast<int>(t % static_cast<std::size_t>(spec.num_classes)));
  const double step = bank.window_s / spec.feature_dim;
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    const auto& ch = spec.channels[c];
    FeatureBlock block;
    block.channel = ch.name;
    block.kind = ch.kind;
    block.values.resize(static_cast<Eigen::Index>(n), spec.feature_dim);
    for (int i = 0; i < spec.feature_dim; ++i) {
      block.times_s.push_back(ch.kind == FeatureKind::ERP ? (i + 1) * step : (i + 0.5) * step);
    }
    for (std::size_t t = 0; t < n; ++t) {
      std::mt19937_64 rng(derive_seed(spec.seed, c * n + t));
      const auto y = static_cast<std::size_t>(bank.labels[t]);
      block.values.row(static_cast<Eigen::Index>(t)) = draw(ch.means[y], factors[c][y], rng).transpose();
    }
    bank.blocks.push_back(std::move(block));
  }
  return bank;
}

TrialSet generate_raw(const SynthSpec& spec) {
  validate(spec);
  const FeatureBank targets = generate_features(spec);
  const auto& r = spec.raw;
  const double window = spec.window_s();
  const auto n_pre = static_cast<std::size_t>(std::llround(r.pre_onset_s * r.fs));
  const auto n_win = static_cast<std::size_t>(std::llround(window * r.fs));
  const auto n_post = static_cast<std::size_t>(std::llround(r.post_window_s * r.fs));
  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);

  TrialSet set;
  set.content = DataContent::Raw;
  set.n_trials = targets.n_trials();
  set.n_channels = spec.channels.size();
  set.n_samples = n_pre + n_win + n_post + 1;
  set.fs = r.fs;
  set.t0_index = n_pre;
  set.labels = targets.labels;
  set.num_classes = spec.num_classes;
  for (const auto& ch : spec.channels) set.channel_names.push_back(ch.name);
  set.data.resize(set.n_trials * set.n_channels * set.n_samples);

  std::vector<double> knot_t{0.0};
  for (std::size_t i = 0; i < d; ++i) knot_t.push_back(static_cast<double>(i + 1) * window / static_cast<double>(d));
  knot_t.push_back(window + window / static_cast<double>(d));
  // HGP window boundaries in samples after onset, as used by the extractor.
  std::vector<std::ptrdiff_t> bounds;
  for (std::size_t i = 0; i <= d; ++i) {
    bounds.push_back(static_cast<std::ptrdiff_t>(
        std::llround(static_cast<double>(i) * window * r.fs / static_cast<double>(d))));
  }

  for (std::size_t c = 0; c < set.n_channels; ++c) {
    const auto& ch = spec.channels[c];
    const auto& target = targets.blocks[c].values;
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      // Signal noise uses a stream distinct from the feature draws.
      std::mt19937_64 rng(derive_seed(spec.seed ^ 0xA5A5A5A5A5A5A5A5ull, c * set.n_trials + t));
      std::normal_distribution<double> noise(0.0, r.noise_std);
      std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
      const double phase = phase_dist(rng);
      auto dst = set.channel(t, c);
      const auto row = static_cast<Eigen::Index>(t);
      std::vector<double> knot_v{0.0};
      for (std::size_t i = 0; i < d; ++i) knot_v.push_back(target(row, static_cast<Eigen::Index>(i)));
      knot_v.push_back(0.0);
      for (std::size_t s = 0; s < set.n_samples; ++s) {
        const double rel = (static_cast<double>(s) - static_cast<double>(n_pre)) / r.fs;
        double value = 0.0;
        if (ch.kind == FeatureKind::ERP) {
          value = spline_at(knot_t, knot_v, rel);
        } else {
          std::size_t w = 0;
          const auto offset = static_cast<std::ptrdiff_t>(s) - static_cast<std::ptrdiff_t>(n_pre);
          while (w + 1 < d && offset >= bounds[w + 1]) ++w;
          const double amplitude = std::sqrt(2.0 * std::exp(target(row, static_cast<Eigen::Index>(w))));
          value = amplitude * std::sin(2.0 * std::numbers::pi * r.carrier_hz * rel + phase);
        }
        dst[s] = static_cast<float>(value + noise(rng));
      }
    }
  }
  return set;
}

TrialSet generate_dataset(const SynthSpec& spec) {
  return spec.mode == Mode::Raw ? generate_raw(spec) : feature_set_from_bank(generate_features(spec));
}

BayesAccuracy bayes_optimal_accuracy(const SynthSpec& spec, std::size_t n_mc, std::uint64_t seed) {
  validate(spec);
  if (n_mc == 0) throw_data("Monte Carlo sample count must be positive");
  const auto factors = factor_all(spec);
  std::vector<std::vector<double>> log_dets(spec.channels.size());
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    for (const auto& l : factors[c]) log_dets[c].push_back(2.0 * l.diagonal().array().log().sum());
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, spec.num_classes - 1);
  std::size_t correct = 0;
  Eigen::VectorXd score(spec.num_classes);
  for (std::size_t m = 0; m < n_mc; ++m) {
    const int y = pick(rng);
    score.setZero();
    for (std::size_t c = 0; c < spec.channels.size(); ++c) {
      const auto& ch = spec.channels[c];
      const Eigen::VectorXd x = draw(ch.means[static_cast<std::size_t>(y)], factors[c][static_cast<std::size_t>(y)], rng);
      for (int k = 0; k < spec.num_classes; ++k) {
        const Eigen::VectorXd z =
            factors[c][static_cast<std::size_t>(k)].triangularView<Eigen::Lower>().solve(x - ch.means[static_cast<std::size_t>(k)]);
        score(k) += -0.5 * (log_dets[c][static_cast<std::size_t>(k)] + z.squaredNorm());
      }
    }
    Eigen::Index best = 0;
    score.maxCoeff(&best);
    correct += best == y;
  }
  BayesAccuracy out;
  out.n = n_mc;
  out.estimate = static_cast<double>(correct) / static_cast<double>(n_mc);
  out.ci = binomial_interval(out.estimate, n_mc);
  return out;
}

}  // namespace btsc::synth
