#include "btsc/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "btsc/dsp.hpp"
#include "btsc/error.hpp"
#include "btsc/eval.hpp"
#include "btsc/features.hpp"
#include "btsc/model_io.hpp"
#include "btsc/synth.hpp"
#include "btsc/trial_io.hpp"

namespace btsc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

json read_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw_io(what + " not found: " + path.string());
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw_io(what + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw_io("failed writing " + path.string());
}

// Marks `dir` as incomplete until the command finishes.
class PartialMarker {
 public:
  explicit PartialMarker(const fs::path& dir) : marker_(dir / ".partial") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw_io("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text(marker_, "incomplete\n");
  }
  void commit() { fs::remove(marker_); }

 private:
  fs::path marker_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path manifest_path(const fs::path& p) {
  return fs::is_directory(p) ? p / "manifest.json" : p;
}

// --- preprocess -------------------------------------------------------------

void cmd_preprocess(const CommonArgs& args) {
  const fs::path config_path(args.config);
  const json config = read_json(config_path, "config");
  const fs::path base = config_path.parent_path();
  TrialSet set;
  double decimate_hz = 1000.0, line_hz = 60.0, max_harmonic_hz = 200.0;
  bool hgp_planned = true;
  std::vector<dsp::ChannelPair> pairs;
  try {
    set = load_dataset(manifest_path(resolve(base, config.at("dataset").get<std::string>())));
    decimate_hz = config.value("decimate_hz", decimate_hz);
    line_hz = config.value("line_hz", line_hz);
    max_harmonic_hz = config.value("max_harmonic_hz", max_harmonic_hz);
    hgp_planned = config.value("hgp_planned", hgp_planned);
    const json bipolar = config.value("bipolar", json("nearest"));
    if (bipolar.is_string()) {
      if (bipolar.get<std::string>() != "nearest") throw_usage("bipolar must be \"nearest\" or a list of pairs");
      pairs = dsp::nearest_neighbor_pairs(set.n_channels);
    } else {
      for (const auto& p : bipolar) pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw_usage(std::string("invalid preprocess config: ") + e.what());
  }
  if (set.content != DataContent::Raw) throw_data("preprocess expects a raw recording");

  PartialMarker marker(args.out);
  json provenance;
  provenance["input"] = config.at("dataset");
  json steps = json::array();
  json warnings = json::array();

  // 1. decimate
  const double fs_in = set.fs;
  if (fs_in > decimate_hz) {
    TrialSet out = set;
    out.fs = decimate_hz;
    std::vector<std::vector<double>> resampled;
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      for (std::size_t c = 0; c < set.n_channels; ++c) {
        const auto ch = set.channel(t, c);
        resampled.push_back(dsp::decimate(std::vector<double>(ch.begin(), ch.end()), fs_in, decimate_hz));
      }
    }
    out.n_samples = resampled.front().size();
    out.t0_index = static_cast<std::size_t>(std::floor(static_cast<double>(set.t0_index) * decimate_hz / fs_in));
    out.data.clear();
    for (const auto& r : resampled) {
      for (double v : r) out.data.push_back(static_cast<float>(v));
    }
    set = std::move(out);
    steps.push_back({{"step", "decimate"}, {"applied", true}, {"fs_in", fs_in}, {"fs_out", decimate_hz}});
  } else {
    steps.push_back({{"step", "decimate"}, {"applied", false}, {"fs_in", fs_in}, {"fs_out", fs_in}});
    if (fs_in < decimate_hz) {
      warnings.push_back("sampling rate " + std::to_string(fs_in) + " Hz is below the decimation target");
    }
  }

  // 2. demean each channel over the whole recording
  for (std::size_t c = 0; c < set.n_channels; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      for (float v : set.channel(t, c)) sum += v;
    }
    const double mean = sum / static_cast<double>(set.n_trials * set.n_samples);
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      for (float& v : set.channel(t, c)) v = static_cast<float>(v - mean);
    }
  }
  steps.push_back({{"step", "demean"}, {"applied", true}, {"scope", "channel"}});

  // 3. line noise
  double top = 0.0;
  for (double f = line_hz; f <= max_harmonic_hz + 1e-9 && f + 1.0 < set.fs / 2.0; f += line_hz) top = f;
  if (top > 0.0) {
    if (top + line_hz <= max_harmonic_hz + 1e-9) {
      warnings.push_back("line harmonics above " + std::to_string(top) + " Hz exceed Nyquist and were skipped");
    }
    for (std::size_t t = 0; t < set.n_trials; ++t) {
      for (std::size_t c = 0; c < set.n_channels; ++c) {
        auto ch = set.channel(t, c);
        const auto cleaned = dsp::remove_line_noise(std::vector<double>(ch.begin(), ch.end()), set.fs, line_hz, top);
        for (std::size_t s = 0; s < ch.size(); ++s) ch[s] = static_cast<float>(cleaned[s]);
      }
    }
    steps.push_back({{"step", "line_noise"}, {"applied", true}, {"line_hz", line_hz},
                     {"max_harmonic_hz", top}, {"half_width_hz", 1.0}});
  } else {
    steps.push_back({{"step", "line_noise"}, {"applied", false}, {"line_hz", line_hz}});
    warnings.push_back("line frequency is above Nyquist; no line noise removed");
  }

  // 4. bipolar
  set = dsp::bipolar_rereference(set, pairs);
  json pair_json = json::array();
  for (const auto& [a, b] : pairs) pair_json.push_back({a, b});
  steps.push_back({{"step", "bipolar_rereference"}, {"applied", true}, {"pairs", pair_json}});

  if (hgp_planned && set.fs < kHgpMinFs) {
    warnings.push_back("sampling rate below 240 Hz: HGP features (65-120 Hz) cannot be extracted");
  }
  provenance["steps"] = steps;
  provenance["warnings"] = warnings;
  provenance["output_fs"] = set.fs;
  save_dataset(set, args.out);
  write_text(fs::path(args.out) / "provenance.json", provenance.dump(2) + "\n");
  marker.commit();
}

// --- synth ------------------------------------------------------------------

void cmd_synth(const CommonArgs& args) {
  const json doc = read_json(args.config, "synth spec");
  synth::SynthSpec spec = synth::spec_from_json(doc);
  if (args.seed) spec.seed = *args.seed;
  const TrialSet set = synth::generate_dataset(spec);
  PartialMarker marker(args.out);
  save_dataset(set, args.out);
  marker.commit();
}

// --- fit-eval ---------------------------------------------------------------

FeatureBank load_bank(const RunConfig& run) {
  const TrialSet set = load_dataset(manifest_path(run.dataset));
  if (set.content == DataContent::Raw) {
    return featurize(set, run.report.window_s, run.report.erp, run.report.hgp);
  }
  FeatureBank bank = bank_from_feature_set(set);
  std::vector<FeatureBlock> kept;
  for (auto& b : bank.blocks) {
    if ((b.kind == FeatureKind::ERP && run.report.erp) || (b.kind == FeatureKind::HGP && run.report.hgp)) {
      kept.push_back(std::move(b));
    }
  }
  bank.blocks = std::move(kept);
  if (bank.blocks.empty()) throw_data("no feature blocks left after ERP/HGP selection");
  return bank;
}

void cmd_fit_eval(const CommonArgs& args) {
  const fs::path config_path(args.config);
  RunConfig run = run_config_from_json(read_json(config_path, "config"), config_path.parent_path());
  if (args.seed) run.report.pipeline.seed = *args.seed;

  const FeatureBank bank = load_bank(run);
  validate(bank);
  if (run.report.window_s != bank.window_s) run.report.window_s = bank.window_s;

  PartialMarker marker(args.out);
  const fs::path out(args.out);
  const auto& pipeline = run.report.pipeline;
  const NestedEvaluation evaluation = evaluate_nested(bank, pipeline);
  std::vector<TimePoint> curve;
  if (run.time_curve) curve = accuracy_over_time(bank, pipeline);
  const TrainedPipeline final_model = train_pipeline(bank, pipeline, pipeline.seed);
  const EvalReport report = make_report(run.report, evaluation, curve, final_model.ensemble);

  write_text(out / "report.json", report_to_json(report).dump(2) + "\n");
  std::ostringstream tables, trace, svg;
  write_tables_csv(report, tables);
  write_text(out / "tables.csv", tables.str());
  write_trace_csv(final_model.ensemble.trace(), trace);
  write_text(out / "trace.csv", trace.str());
  write_curve_svg(report.accuracy_over_time, 1.0 / bank.num_classes, svg);
  write_text(out / "curve.svg", svg.str());
  save_model(final_model.ensemble, out / "model.json");
  if (run.dump_features) {
    std::ostringstream csv;
    write_features_csv(bank, csv);
    write_text(out / "features.csv", csv.str());
  }
  marker.commit();
}

// --- report -----------------------------------------------------------------

void cmd_report(const CommonArgs& args) {
  const EvalReport report = report_from_json(read_json(args.config, "report"));
  PartialMarker marker(args.out);
  std::ostringstream tables, svg;
  write_tables_csv(report, tables);
  write_text(fs::path(args.out) / "tables.csv", tables.str());
  const double chance = report.num_classes > 0 ? 1.0 / report.num_classes : 0.0;
  write_curve_svg(report.accuracy_over_time, chance, svg);
  write_text(fs::path(args.out) / "curve.svg", svg.str());
  marker.commit();
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig run;
  try {
    run.dataset = resolve(base_dir, doc.at("dataset").get<std::string>());
    auto& r = run.report;
    r.dataset = doc.at("dataset").get<std::string>();
    r.window_s = doc.value("window_s", 1.0);
    r.erp = doc.value("erp", true);
    r.hgp = doc.value("hgp", true);
    auto& p = r.pipeline;
    p.fit.shrinkage = doc.value("lambda", kDefaultShrinkage);
    const auto prior = doc.value("prior", std::string("empirical"));
    if (prior != "empirical" && prior != "uniform") throw_usage("prior must be \"empirical\" or \"uniform\"");
    p.fit.prior = prior == "uniform" ? PriorMode::Uniform : PriorMode::Empirical;
    p.k_folds = doc.value("k_folds", 5);
    p.seed = doc.value("seed", std::uint64_t{0});
    const auto rule = doc.value("rule", std::string("likelihood"));
    if (rule != "likelihood" && rule != "voting") throw_usage("rule must be \"likelihood\" or \"voting\"");
    p.rule = parse_combination_rule(rule);
    p.max_members = doc.value("max_members", kDefaultMaxMembers);
    p.threads = doc.value("threads", 1);
    run.time_curve = doc.value("time_curve", true);
    run.dump_features = doc.value("dump_features", false);
  } catch (const json::exception& e) {
    throw_usage(std::string("invalid run config: ") + e.what());
  }
  const auto& p = run.report.pipeline;
  if (p.k_folds < 2) throw_usage("k_folds must be at least 2");
  if (!(run.report.window_s > 0.0)) throw_usage("window_s must be positive");
  if (!(p.fit.shrinkage >= 0.0 && p.fit.shrinkage <= 1.0)) throw_usage("lambda must lie in [0, 1]");
  if (p.max_members < 1) throw_usage("max_members must be at least 1");
  if (!run.report.erp && !run.report.hgp) throw_usage("enable at least one of erp or hgp");
  return run;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian time-series classifier for windowed neural features"};
  app.require_subcommand(1);
  CommonArgs common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file")->required();
    sub->add_option("--out", common.out, "output directory")->required();
    sub->add_option("--seed", common.seed, "seed (overrides the config)");
  };
  auto* preprocess = app.add_subcommand("preprocess", "decimate, demean, remove line noise, bipolar re-reference");
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset from a spec");
  auto* fit_eval = app.add_subcommand("fit-eval", "featurize, fit, select and cross-validate");
  auto* report = app.add_subcommand("report", "render tables.csv and curve.svg from a report.json");
  for (auto* sub : {preprocess, synth_cmd, fit_eval, report}) add_common(sub);

  std::vector<const char*> argv{"btsc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  try {
    if (*preprocess) cmd_preprocess(common);
    if (*synth_cmd) cmd_synth(common);
    if (*fit_eval) cmd_fit_eval(common);
    if (*report) cmd_report(common);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Numerical);
  }
  return 0;
}

}  // namespace btsc::cli
