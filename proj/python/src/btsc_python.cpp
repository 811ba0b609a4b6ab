#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "btsc/cli.hpp"
#include "btsc/dsp.hpp"
#include "btsc/ensemble.hpp"
#include "btsc/error.hpp"
#include "btsc/eval.hpp"
#include "btsc/features.hpp"
#include "btsc/gaussian_model.hpp"
#include "btsc/synth.hpp"
#include "btsc/trial_io.hpp"

namespace py = pybind11;
using namespace btsc;

namespace {

using Signal = std::vector<double>;

py::array_t<float> trial_array(const TrialSet& s) {
  py::array_t<float> out({s.n_trials, s.n_channels, s.n_samples});
  std::copy(s.data.begin(), s.data.end(), out.mutable_data());
  return out;
}

FeatureBank make_bank(const std::vector<std::tuple<std::string, std::string, Eigen::MatrixXd>>& blocks,
                      std::vector<int> labels, double window_s, int num_classes) {
  FeatureBank bank;
  bank.labels = std::move(labels);
  bank.num_classes = num_classes > 0 ? num_classes : infer_num_classes(bank.labels);
  bank.window_s = window_s;
  for (const auto& [channel, kind, values] : blocks) {
    const FeatureKind k = parse_feature_kind(kind);
    bank.blocks.push_back({channel, k, values, feature_times(k, window_s)});
  }
  validate(bank);
  return bank;
}

PipelineConfig make_config(int k_folds, std::uint64_t seed, const std::string& rule, double shrinkage,
                           const std::string& prior, int max_members, int threads) {
  PipelineConfig cfg;
  cfg.k_folds = k_folds;
  cfg.seed = seed;
  cfg.rule = parse_combination_rule(rule);
  cfg.fit.shrinkage = shrinkage;
  if (prior != "empirical" && prior != "uniform") throw_usage("prior must be \"empirical\" or \"uniform\"");
  cfg.fit.prior = prior == "uniform" ? PriorMode::Uniform : PriorMode::Empirical;
  cfg.max_members = max_members;
  cfg.threads = threads;
  return cfg;
}

py::dict trace_row(const SelectionStep& s) {
  py::dict d;
  d["channel"] = s.channel;
  d["kind"] = std::string(to_string(s.kind));
  d["d_minimal"] = s.d_minimal;
  d["cv_accuracy"] = s.cv_accuracy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian time-series classifier: per-channel Gaussian models, greedy ensembles, nested CV.";

  // Raised with (message, exit_code) so callers can map failures like the CLI.
  static py::exception<Error> error_type(m, "BtscError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, py::make_tuple(e.what(), e.exit_code()));
    }
  });

  // Datasets
  py::class_<TrialSet>(m, "TrialSet")
      .def_property_readonly("data", &trial_array, "float32 array, shape (trials, channels, samples)")
      .def_readonly("fs", &TrialSet::fs)
      .def_readonly("labels", &TrialSet::labels)
      .def_readonly("num_classes", &TrialSet::num_classes)
      .def_readonly("channel_names", &TrialSet::channel_names)
      .def_readonly("t0_index", &TrialSet::t0_index)
      .def_property_readonly("is_features", [](const TrialSet& s) { return s.content == DataContent::Features; });
  m.def("load_dataset", &load_dataset, py::arg("manifest_path"));
  m.def("save_dataset", &save_dataset, py::arg("set"), py::arg("dir"));

  // Signal processing and features
  m.def("demean", [](const Signal& x) { return dsp::demean(x); });
  m.def("remove_line_noise", [](const Signal& x, double fs, double line_hz, double max_harmonic_hz) {
    return dsp::remove_line_noise(x, fs, line_hz, max_harmonic_hz);
  }, py::arg("signal"), py::arg("fs"), py::arg("line_hz") = 60.0, py::arg("max_harmonic_hz") = 200.0);
  m.def("decimate", [](const Signal& x, double fs_in, double fs_out) { return dsp::decimate(x, fs_in, fs_out); },
        py::arg("signal"), py::arg("fs_in"), py::arg("fs_out"));
  m.def("feature_count", &feature_count, py::arg("window_s"));
  m.def("extract_erp", [](const Signal& x, double fs, std::size_t onset, double window_s) {
    return extract_erp(x, fs, onset, window_s);
  }, py::arg("signal"), py::arg("fs"), py::arg("onset"), py::arg("window_s") = 1.0);
  m.def("extract_hgp", [](const Signal& x, double fs, std::size_t onset, double window_s) {
    return extract_hgp(x, fs, onset, window_s);
  }, py::arg("signal"), py::arg("fs"), py::arg("onset"), py::arg("window_s") = 1.0);

  // Gaussian classifier
  py::class_<GaussianClassModel>(m, "GaussianClassModel")
      .def_static("fit", [](const Eigen::MatrixXd& x, const std::vector<int>& y, int num_classes, double shrinkage,
                            const std::string& prior) {
        FitOptions opt{shrinkage, prior == "uniform" ? PriorMode::Uniform : PriorMode::Empirical};
        return GaussianClassModel::fit(x, y, num_classes, opt);
      }, py::arg("x"), py::arg("y"), py::arg("num_classes"), py::arg("shrinkage") = kDefaultShrinkage,
         py::arg("prior") = "empirical")
      .def_property_readonly("dim", &GaussianClassModel::dim)
      .def_property_readonly("num_classes", &GaussianClassModel::num_classes)
      .def_property_readonly("log_prior", &GaussianClassModel::log_prior)
      .def("mean", [](const GaussianClassModel& g, int c) { return g.klass(c).mean; })
      .def("cov", [](const GaussianClassModel& g, int c) { return g.klass(c).cov; })
      .def("log_density", [](const GaussianClassModel& g, const Eigen::VectorXd& x, int c) { return g.log_density(x, c); })
      .def("posterior_log_scores", [](const GaussianClassModel& g, const Eigen::VectorXd& x) { return g.posterior_log_scores(x); })
      .def("predict", [](const GaussianClassModel& g, const Eigen::VectorXd& x) { return g.predict(x); })
      .def("marginalize", &GaussianClassModel::marginalize, py::arg("horizon"));

  m.def("select_minimal_horizon", [](const Eigen::MatrixXd& x, const std::vector<int>& y, int num_classes, int k_folds,
                                     std::uint64_t seed, double shrinkage) {
    const auto sel = select_minimal_horizon(x, y, num_classes, k_folds, seed, FitOptions{shrinkage});
    return py::make_tuple(sel.d_minimal, sel.curve);
  }, py::arg("x"), py::arg("y"), py::arg("num_classes"), py::arg("k_folds") = 5, py::arg("seed") = 0,
     py::arg("shrinkage") = kDefaultShrinkage);

  m.def("combine_likelihood", [](const std::vector<Eigen::VectorXd>& ll, const Eigen::VectorXd& log_prior) {
    const auto d = combine_likelihood(ll, log_prior);
    return py::make_tuple(d.label, d.scores);
  }, py::arg("member_log_likelihoods"), py::arg("log_prior"));
  m.def("combine_voting", [](const std::vector<int>& votes, const std::vector<Eigen::VectorXd>& scores) {
    return combine_voting(votes, scores);
  }, py::arg("predictions"), py::arg("member_log_scores"));

  // Feature banks and evaluation
  py::class_<FeatureBank>(m, "FeatureBank")
      .def(py::init(&make_bank), py::arg("blocks"), py::arg("labels"), py::arg("window_s"), py::arg("num_classes") = 0,
           "blocks: list of (channel, 'ERP'|'HGP', n_trials x d array)")
      .def_readonly("labels", &FeatureBank::labels)
      .def_readonly("num_classes", &FeatureBank::num_classes)
      .def_readonly("window_s", &FeatureBank::window_s)
      .def_property_readonly("n_trials", &FeatureBank::n_trials)
      .def_property_readonly("dim", &FeatureBank::dim)
      .def_property_readonly("blocks", [](const FeatureBank& b) {
        py::list out;
        for (const auto& blk : b.blocks) out.append(py::make_tuple(blk.channel, std::string(to_string(blk.kind)), blk.values));
        return out;
      })
      .def("truncated", &FeatureBank::truncated, py::arg("horizon"));
  m.def("featurize", &featurize, py::arg("set"), py::arg("window_s") = 1.0, py::arg("erp") = true, py::arg("hgp") = true);
  m.def("bank_from_feature_set", &bank_from_feature_set, py::arg("set"));

  m.def("evaluate_nested", [](const FeatureBank& bank, int k_folds, std::uint64_t seed, const std::string& rule,
                              double shrinkage, const std::string& prior, int max_members, int threads) {
    const auto eval = evaluate_nested(bank, make_config(k_folds, seed, rule, shrinkage, prior, max_members, threads));
    py::dict d;
    py::list folds;
    for (const auto& f : eval.folds) {
      py::dict fd;
      fd["accuracy"] = f.accuracy;
      fd["f1"] = f.f1;
      fd["test_indices"] = f.test_indices;
      fd["predictions"] = f.predictions;
      py::list trace;
      for (const auto& s : f.trained.ensemble.trace()) trace.append(trace_row(s));
      fd["trace"] = trace;
      folds.append(fd);
    }
    d["folds"] = folds;
    d["accuracy_mean"] = eval.accuracy_mean;
    d["accuracy_std"] = eval.accuracy_std;
    d["f1_mean"] = eval.f1_mean;
    d["f1_std"] = eval.f1_std;
    return d;
  }, py::arg("bank"), py::arg("k_folds") = 5, py::arg("seed") = 0, py::arg("rule") = "likelihood",
     py::arg("shrinkage") = kDefaultShrinkage, py::arg("prior") = "empirical", py::arg("max_members") = kDefaultMaxMembers,
     py::arg("threads") = 1);

  m.def("accuracy_over_time", [](const FeatureBank& bank, int k_folds, std::uint64_t seed, const std::string& rule,
                                 double shrinkage, int threads) {
    const auto curve = accuracy_over_time(bank, make_config(k_folds, seed, rule, shrinkage, "empirical",
                                                            kDefaultMaxMembers, threads));
    py::list out;
    for (const auto& p : curve) {
      py::dict d;
      d["horizon"] = p.horizon;
      d["time_s"] = p.time_s;
      d["accuracy"] = p.accuracy;
      d["members"] = p.mean_members;
      out.append(d);
    }
    return out;
  }, py::arg("bank"), py::arg("k_folds") = 5, py::arg("seed") = 0, py::arg("rule") = "likelihood",
     py::arg("shrinkage") = kDefaultShrinkage, py::arg("threads") = 1);

  m.def("train", [](const FeatureBank& bank, int k_folds, std::uint64_t seed, const std::string& rule, double shrinkage) {
    const auto cfg = make_config(k_folds, seed, rule, shrinkage, "empirical", kDefaultMaxMembers, 1);
    const auto trained = train_pipeline(bank, cfg, seed);
    py::list trace;
    for (const auto& s : trained.ensemble.trace()) trace.append(trace_row(s));
    return py::make_tuple(trained.ensemble.predict(bank), trace);
  }, py::arg("bank"), py::arg("k_folds") = 5, py::arg("seed") = 0, py::arg("rule") = "likelihood",
     py::arg("shrinkage") = kDefaultShrinkage, "Fits on the whole bank; returns (in-sample predictions, selection trace).");

  // Synthetic data (specs as JSON text; the Python wrapper accepts dicts)
  m.def("_synth_features", [](const std::string& spec_json) {
    return synth::generate_features(synth::spec_from_json(nlohmann::json::parse(spec_json)));
  }, py::arg("spec_json"));
  m.def("_synth_dataset", [](const std::string& spec_json) {
    return synth::generate_dataset(synth::spec_from_json(nlohmann::json::parse(spec_json)));
  }, py::arg("spec_json"));
  m.def("_bayes_optimal_accuracy", [](const std::string& spec_json, std::size_t n_mc, std::uint64_t seed) {
    const auto b = synth::bayes_optimal_accuracy(synth::spec_from_json(nlohmann::json::parse(spec_json)), n_mc, seed);
    return py::make_tuple(b.estimate, b.ci.lo, b.ci.hi);
  }, py::arg("spec_json"), py::arg("n_mc"), py::arg("seed") = 0);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a btsc subcommand in-process; returns (exit_code, stdout, stderr).");
}
