#include "btsc/report.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "btsc/error.hpp"

namespace btsc {

using nlohmann::json;

namespace {

json step_to_json(const SelectionStep& s) {
  return {{"candidate", s.candidate},
          {"channel", s.channel},
          {"kind", std::string(to_string(s.kind))},
          {"d_minimal", s.d_minimal},
          {"cv_accuracy", s.cv_accuracy}};
}

SelectionStep step_from_json(const json& j) {
  return {j.at("candidate").get<std::size_t>(), j.at("channel").get<std::string>(),
          parse_feature_kind(j.at("kind").get<std::string>()), j.at("d_minimal").get<int>(),
          j.at("cv_accuracy").get<double>()};
}

std::string fmt(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

EvalReport make_report(const ReportConfig& config, const NestedEvaluation& evaluation,
                       std::vector<TimePoint> curve, const EnsembleModel& final_model) {
  EvalReport report;
  report.config = config;
  report.num_classes = final_model.num_classes();
  for (std::size_t f = 0; f < evaluation.folds.size(); ++f) {
    const auto& outcome = evaluation.folds[f];
    FoldSummary s;
    s.fold = static_cast<int>(f);
    s.accuracy = outcome.accuracy;
    s.f1 = outcome.f1;
    s.best_single_cv_accuracy = outcome.best_single_cv_accuracy;
    s.ensemble_cv_accuracy = outcome.ensemble_cv_accuracy;
    s.trace = outcome.trained.ensemble.trace();
    for (const auto& c : outcome.trained.candidates) {
      s.candidates.push_back({c.channel, c.kind, c.d_minimal,
                              c.cv_curve[static_cast<std::size_t>(c.d_minimal - 1)]});
    }
    report.folds.push_back(std::move(s));
  }
  report.accuracy_mean = evaluation.accuracy_mean;
  report.accuracy_std = evaluation.accuracy_std;
  report.f1_mean = evaluation.f1_mean;
  report.f1_std = evaluation.f1_std;
  report.accuracy_over_time = std::move(curve);
  report.final_trace = final_model.trace();
  return report;
}

json report_to_json(const EvalReport& report) {
  const auto& p = report.config.pipeline;
  json doc;
  doc["config"] = {{"dataset", report.config.dataset},
                   {"window_s", report.config.window_s},
                   {"erp", report.config.erp},
                   {"hgp", report.config.hgp},
                   {"lambda", p.fit.shrinkage},
                   {"prior", p.fit.prior == PriorMode::Uniform ? "uniform" : "empirical"},
                   {"k_folds", p.k_folds},
                   {"seed", p.seed},
                   {"rule", std::string(to_string(p.rule))},
                   {"max_members", p.max_members},
                   {"f1_average", "macro"}};
  json folds = json::array();
  for (const auto& f : report.folds) {
    json trace = json::array();
    for (const auto& s : f.trace) trace.push_back(step_to_json(s));
    json candidates = json::array();
    for (const auto& c : f.candidates) {
      candidates.push_back({{"channel", c.channel},
                            {"kind", std::string(to_string(c.kind))},
                            {"d_minimal", c.d_minimal},
                            {"cv_accuracy", c.cv_accuracy}});
    }
    folds.push_back({{"fold", f.fold},
                     {"accuracy", f.accuracy},
                     {"f1", f.f1},
                     {"best_single_cv_accuracy", f.best_single_cv_accuracy},
                     {"ensemble_cv_accuracy", f.ensemble_cv_accuracy},
                     {"trace", std::move(trace)},
                     {"candidates", std::move(candidates)}});
  }
  doc["num_classes"] = report.num_classes;
  doc["folds"] = std::move(folds);
  doc["accuracy_mean"] = report.accuracy_mean;
  doc["accuracy_std"] = report.accuracy_std;
  doc["f1_mean"] = report.f1_mean;
  doc["f1_std"] = report.f1_std;
  json curve = json::array();
  for (const auto& t : report.accuracy_over_time) {
    curve.push_back({{"horizon", t.horizon},
                     {"time_s", t.time_s},
                     {"accuracy", t.accuracy},
                     {"members", t.mean_members}});
  }
  doc["accuracy_over_time"] = std::move(curve);
  json final_trace = json::array();
  for (const auto& s : report.final_trace) final_trace.push_back(step_to_json(s));
  doc["final_model"] = {{"trace", std::move(final_trace)}};
  return doc;
}

EvalReport report_from_json(const json& doc) {
  try {
    EvalReport report;
    const auto& c = doc.at("config");
    report.config.dataset = c.at("dataset").get<std::string>();
    report.config.window_s = c.at("window_s").get<double>();
    report.config.erp = c.at("erp").get<bool>();
    report.config.hgp = c.at("hgp").get<bool>();
    auto& p = report.config.pipeline;
    p.fit.shrinkage = c.at("lambda").get<double>();
    p.fit.prior = c.at("prior").get<std::string>() == "uniform" ? PriorMode::Uniform : PriorMode::Empirical;
    p.k_folds = c.at("k_folds").get<int>();
    p.seed = c.at("seed").get<std::uint64_t>();
    p.rule = parse_combination_rule(c.at("rule").get<std::string>());
    p.max_members = c.at("max_members").get<int>();
    report.num_classes = doc.at("num_classes").get<int>();
    for (const auto& f : doc.at("folds")) {
      FoldSummary s;
      s.fold = f.at("fold").get<int>();
      s.accuracy = f.at("accuracy").get<double>();
      s.f1 = f.at("f1").get<double>();
      s.best_single_cv_accuracy = f.at("best_single_cv_accuracy").get<double>();
      s.ensemble_cv_accuracy = f.at("ensemble_cv_accuracy").get<double>();
      for (const auto& st : f.at("trace")) s.trace.push_back(step_from_json(st));
      for (const auto& cand : f.at("candidates")) {
        s.candidates.push_back({cand.at("channel").get<std::string>(),
                                parse_feature_kind(cand.at("kind").get<std::string>()),
                                cand.at("d_minimal").get<int>(), cand.at("cv_accuracy").get<double>()});
      }
      report.folds.push_back(std::move(s));
    }
    report.accuracy_mean = doc.at("accuracy_mean").get<double>();
    report.accuracy_std = doc.at("accuracy_std").get<double>();
    report.f1_mean = doc.at("f1_mean").get<double>();
    report.f1_std = doc.at("f1_std").get<double>();
    for (const auto& t : doc.at("accuracy_over_time")) {
      report.accuracy_over_time.push_back({t.at("horizon").get<int>(), t.at("time_s").get<double>(),
                                           t.at("accuracy").get<double>(), t.at("members").get<double>()});
    }
    for (const auto& st : doc.at("final_model").at("trace")) report.final_trace.push_back(step_from_json(st));
    return report;
  } catch (const json::exception& e) {
    throw_data(std::string("malformed report: ") + e.what());
  }
}

void write_tables_csv(const EvalReport& report, std::ostream& out) {
  out << "fold,accuracy,f1,n_members,members\n";
  const auto old_precision = out.precision(17);
  for (const auto& f : report.folds) {
    std::string members;
    for (const auto& s : f.trace) {
      if (!members.empty()) members += ';';
      members += s.channel + "/" + std::string(to_string(s.kind)) + "@" + std::to_string(s.d_minimal);
    }
    out << f.fold << ',' << f.accuracy << ',' << f.f1 << ',' << f.trace.size() << ',' << members << '\n';
  }
  out << "mean," << report.accuracy_mean << ',' << report.f1_mean << ",,\n";
  out << "std," << report.accuracy_std << ',' << report.f1_std << ",,\n";
  out.precision(old_precision);
}

void write_curve_svg(std::span<const TimePoint> curve, double chance, std::ostream& out) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double t_max = 0.0;
  for (const auto& p : curve) t_max = std::max(t_max, p.time_s);
  if (!(t_max > 0.0)) t_max = 1.0;
  auto x_of = [&](double t) { return kLeft + plot_w * t / t_max; };
  auto y_of = [&](double a) { return kTop + plot_h * (1.0 - a); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">Accuracy over time after onset</text>\n";
  // Axes.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double a = i / 5.0;
    out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fmt(y_of(a)) << "\" x2=\"" << kLeft << "\" y2=\""
        << fmt(y_of(a)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y_of(a) + 4) << "\" text-anchor=\"end\" "
        << "font-family=\"sans-serif\" font-size=\"11\">" << fmt(a, 1) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double t = t_max * i / 4.0;
    out << "<line x1=\"" << fmt(x_of(t)) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << fmt(x_of(t)) << "\" y2=\""
        << kTop + plot_h + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(x_of(t)) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"11\">" << fmt(t, 2) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"12\">time after onset (s)</text>\n";
  out << "<text x=\"15\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 15 " << kTop + plot_h / 2 << ")\">accuracy</text>\n";
  if (chance > 0.0 && chance < 1.0) {
    out << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(y_of(chance)) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << fmt(y_of(chance)) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  }
  if (!curve.empty()) {
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (i) out << ' ';
      out << fmt(x_of(curve[i].time_s)) << ',' << fmt(y_of(curve[i].accuracy));
    }
    out << "\"/>\n";
    for (const auto& p : curve) {
      out << "<circle cx=\"" << fmt(x_of(p.time_s)) << "\" cy=\"" << fmt(y_of(p.accuracy))
          << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace btsc
