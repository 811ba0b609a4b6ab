#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "btsc/eval.hpp"

namespace btsc {

// Echoed into every report so a run can be reproduced from it alone.
struct ReportConfig {
  PipelineConfig pipeline;
  double window_s = 1.0;
  bool erp = true;
  bool hgp = true;
  std::string dataset;
};

struct CandidateSummary {
  std::string channel;
  FeatureKind kind = FeatureKind::ERP;
  int d_minimal = 1;
  double cv_accuracy = 0.0;  // curve value at d_minimal
};

struct FoldSummary {
  int fold = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double best_single_cv_accuracy = 0.0;
  double ensemble_cv_accuracy = 0.0;
  std::vector<SelectionStep> trace;
  std::vector<CandidateSummary> candidates;
};

struct EvalReport {
  ReportConfig config;
  int num_classes = 0;
  std::vector<FoldSummary> folds;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double f1_mean = 0.0;
  double f1_std = 0.0;
  std::vector<TimePoint> accuracy_over_time;
  std::vector<SelectionStep> final_trace;
};

EvalReport make_report(const ReportConfig& config, const NestedEvaluation& evaluation,
                       std::vector<TimePoint> curve, const EnsembleModel& final_model);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

// One row per fold plus mean and std rows.
void write_tables_csv(const EvalReport& report, std::ostream& out);

// Standalone SVG line chart of accuracy against time after onset.
void write_curve_svg(std::span<const TimePoint> curve, double chance, std::ostream& out);

}  // namespace btsc
