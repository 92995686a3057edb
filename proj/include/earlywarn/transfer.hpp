#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "earlywarn/aggregate.hpp"
#include "earlywarn/calibrate.hpp"
#include "earlywarn/features.hpp"
#include "earlywarn/hypergrid.hpp"
#include "earlywarn/model.hpp"
#include "earlywarn/tuneval.hpp"

namespace ew::transfer {

struct CourseData {
  std::string name;
  trace::CourseConfig config;
  features::LabeledCohort cohort;
  std::string fingerprint;  // hash of the inputs, hex

  double prevalence() const { return cohort.labels.mean(); }
};

// A course directory holds course.json, events.csv and grades.csv, plus an
// optional weekly_features.csv that replaces extraction.
CourseData load_course(const std::filesystem::path& dir, const features::ExtractOptions& options = {});
CourseData make_course(std::string name, trace::CourseConfig config, std::span<const trace::RawEvent> events,
                       const std::map<std::string, double>& grades, const features::ExtractOptions& options = {});

struct ExperimentPlan {
  std::vector<int> weeks;  // empty: every course week
  std::vector<learners::LearnerKind> learners = {learners::LearnerKind::elastic_net, learners::LearnerKind::forest,
                                                 learners::LearnerKind::boost};
  std::vector<aggregate::Strategy> strategies = {aggregate::Strategy::progressive, aggregate::Strategy::early_reset};
  std::vector<tuneval::ThresholdPolicy> policies = {tuneval::ThresholdPolicy::youden_source,
                                                    tuneval::ThresholdPolicy::prevalence_target};
  std::uint64_t seed = 1;
  learners::GridPreset preset = learners::GridPreset::small;
  bool replication_screening = false;
  double screen_cutoff = 0.90;
  int folds = 10;
  int jobs = 1;
  int calibration_bins = 10;
};

nlohmann::json plan_to_json(const ExperimentPlan& plan);

struct SchemaAlignment {
  std::vector<std::string> shared;
  std::vector<std::string> dropped_from_source;
  std::vector<std::string> dropped_from_target;
};

// Shared columns keep the source order.
SchemaAlignment align_schemas(const std::vector<std::string>& source, const std::vector<std::string>& target);

struct MetricReport {
  std::string reference, target;
  int week = 0;
  learners::LearnerKind learner = learners::LearnerKind::elastic_net;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  tuneval::ThresholdPolicy policy = tuneval::ThresholdPolicy::youden_source;
  double auc = 0, acc = 0, sens = 0, spec = 0, f1 = 0, kappa = 0, threshold = 0;
  int n_flagged = 0;
};

MetricReport make_report(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels, double threshold);

struct CalibrationRecord {
  std::string reference, target;
  int week = 0;
  learners::LearnerKind learner = learners::LearnerKind::elastic_net;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  std::string stage;  // "raw" or "platt"
  calibrate::CalibrationCurve curve;
  calibrate::PlattParams platt;
};

// One trained (week, learner, strategy) cell of a course.
struct CellOutcome {
  int week = 0;
  learners::LearnerKind learner = learners::LearnerKind::elastic_net;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  std::vector<std::string> candidate_features;  // aggregated columns before screening
  std::vector<features::DropRecord> dropped;
  std::vector<std::string> constant_columns;
  TrainedModel model;
  tuneval::SearchResult search;
  Vector in_sample;  // refit-model probabilities on the training rows
  std::optional<calibrate::PlattParams> platt;
  MetricReport report;
};

struct CellFailure {
  std::string reference, target;
  int week = 0;
  learners::LearnerKind learner = learners::LearnerKind::elastic_net;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  std::string message;
};

// Aggregate, screen on this course, tune by stratified CV, refit on all rows,
// set the Youden threshold on in-sample predictions and report in-sample metrics.
// `restrict_to` limits the candidate columns (schema alignment).
CellOutcome run_cell(const CourseData& course, const ExperimentPlan& plan, int week, learners::LearnerKind learner,
                     aggregate::Strategy strategy,
                     const std::optional<std::vector<std::string>>& restrict_to = std::nullopt);

struct WeeklyRun {
  std::vector<CellOutcome> cells;
  std::vector<CellFailure> failures;
};

WeeklyRun run_weekly_pipeline(const CourseData& course, const ExperimentPlan& plan);

struct TransferOutcome {
  SchemaAlignment alignment;
  bool retrained = false;
  std::vector<MetricReport> reports;  // one per policy
  Vector probabilities;
  std::vector<CalibrationRecord> calibration;
};

// Applies a reference cell to a target course. When the target lacks reference
// columns the cell is retrained on the shared columns. Throws SchemaError when
// nothing is shared.
TransferOutcome transfer_evaluate(const CourseData& reference, const CellOutcome& cell, const CourseData& target,
                                  const ExperimentPlan& plan);

struct ImportanceRow {
  std::string reference;
  int week = 0;
  learners::LearnerKind learner = learners::LearnerKind::elastic_net;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  int rank = 0;
  std::string feature;
  double score = 0;
};

// Ranked features per cell; elastic-net tables keep only nonzero coefficients.
std::vector<ImportanceRow> importance_report(const CourseData& course, const std::vector<CellOutcome>& cells,
                                             const ExperimentPlan& plan);

struct AlignmentRow {
  std::string reference, target;
  int week = 0;
  aggregate::Strategy strategy = aggregate::Strategy::progressive;
  std::string feature;
  std::string status;  // shared, source_only, target_only
};

struct ExperimentResult {
  std::vector<MetricReport> reports;
  std::vector<CellOutcome> cells;
  std::vector<ImportanceRow> importance;
  std::vector<AlignmentRow> alignment;
  std::vector<CalibrationRecord> calibration;
  std::vector<CellFailure> failures;
  int attempted = 0;  // in-sample plus transfer cells

  double failure_fraction() const {
    return attempted == 0 ? 0.0 : static_cast<double>(failures.size()) / attempted;
  }
};

ExperimentResult run_experiment(const CourseData& reference, const std::vector<CourseData>& targets,
                                const ExperimentPlan& plan);

// Run manifest: seed, plan, grids and input fingerprints.
nlohmann::json make_manifest(const CourseData& reference, const std::vector<CourseData>& targets,
                             const ExperimentPlan& plan);
// Written through a temporary file and renamed into place.
void write_atomically(const std::filesystem::path& path, const std::string& content);

// results.csv, importance.csv, alignment.csv, cells.csv, screening.csv,
// failures.csv, calibration_summary.csv, calibration/ and models/.
void write_results(const std::filesystem::path& dir, const ExperimentResult& result);

inline constexpr const char* kResultsHeader =
    "reference,target,week,learner,strategy,policy,auc,acc,sens,spec,f1,kappa,threshold,n_flagged";

std::string results_csv(const std::vector<MetricReport>& reports);

}  // namespace ew::transfer
