#include "earlywarn/transfer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"
#include "earlywarn/parallel.hpp"

namespace ew::transfer {
namespace {

namespace fs = std::filesystem;
using aggregate::Strategy;
using learners::LearnerKind;
using tuneval::ThresholdPolicy;

constexpr std::uint64_t kFoldStream = 0xf01d;
constexpr std::uint64_t kModelStream = 1, kSearchStream = 2, kImportanceStream = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::uint64_t cell_seed(std::uint64_t seed, int week, LearnerKind learner, std::uint64_t stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(week), static_cast<std::uint64_t>(learner), stream);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + "\"";
}

std::string cell_name(int week, LearnerKind learner, Strategy strategy) {
  return fmt::format("w{:02d}__{}__{}", week, learners::to_string(learner), aggregate::to_string(strategy));
}

std::vector<Eigen::Index> valid_rows(const Vector& v) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isnan(v(i))) rows.push_back(i);
  return rows;
}

Vector take(const Vector& v, const std::vector<Eigen::Index>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

// Raw and Platt-mapped curves for one set of predictions.
std::vector<CalibrationRecord> calibration_records(const Vector& p, const Vector& labels,
                                                   const std::optional<calibrate::PlattParams>& platt,
                                                   const ExperimentPlan& plan) {
  std::vector<CalibrationRecord> out;
  if (p.size() < plan.calibration_bins) return out;
  CalibrationRecord raw;
  raw.stage = "raw";
  raw.curve = calibrate::calibration_curve(p, labels, plan.calibration_bins);
  out.push_back(raw);
  if (platt) {
    CalibrationRecord mapped;
    mapped.stage = "platt";
    mapped.platt = *platt;
    mapped.curve = calibrate::calibration_curve(calibrate::apply_platt(*platt, p), labels, plan.calibration_bins);
    out.push_back(mapped);
    out.front().platt = *platt;
  }
  return out;
}

}  // namespace

CourseData make_course(std::string name, trace::CourseConfig config, std::span<const trace::RawEvent> events,
                       const std::map<std::string, double>& grades, const features::ExtractOptions& options) {
  std::vector<std::string> students;
  for (const auto& [id, g] : grades) students.push_back(id);
  auto weekly = features::extract_weekly_features(events, config, students, options);
  CourseData course;
  course.name = std::move(name);
  course.config = std::move(config);
  course.cohort = features::make_labeled_cohort(std::move(weekly), grades);
  return course;
}

CourseData load_course(const fs::path& dir, const features::ExtractOptions& options) {
  const auto config_text = read_file(dir / "course.json");
  auto config = trace::parse_course_config(config_text);
  const auto grades_text = read_file(dir / "grades.csv");
  std::istringstream grades_in(grades_text);
  const auto grades = trace::parse_grades(grades_in);
  std::string fingerprint_input = config_text + '\0' + grades_text;

  CourseData course;
  const auto weekly_path = dir / "weekly_features.csv";
  if (fs::exists(weekly_path)) {
    const auto text = read_file(weekly_path);
    fingerprint_input += '\0' + text;
    std::istringstream in(text);
    auto weekly = features::read_weekly_csv(in);
    if (weekly.n_weeks() != config.n_weeks)
      throw SchemaError(fmt::format("weekly_features.csv has {} weeks, course.json {}", weekly.n_weeks(),
                                    config.n_weeks));
    course.name = config.course_id;
    course.config = std::move(config);
    course.cohort = features::make_labeled_cohort(std::move(weekly), grades);
  } else {
    const auto text = read_file(dir / "events.csv");
    fingerprint_input += '\0' + text;
    std::istringstream in(text);
    const auto events = trace::parse_event_log(in, config);
    const auto name = config.course_id;
    course = make_course(name, std::move(config), events, grades, options);
  }
  course.fingerprint = hex(fnv1a64(fingerprint_input));
  return course;
}

nlohmann::json plan_to_json(const ExperimentPlan& plan) {
  std::vector<std::string> learner_names, strategy_names, policy_names;
  for (auto l : plan.learners) learner_names.push_back(learners::to_string(l));
  for (auto s : plan.strategies) strategy_names.push_back(aggregate::to_string(s));
  for (auto p : plan.policies) policy_names.push_back(tuneval::to_string(p));
  return {{"weeks", plan.weeks},
          {"learners", learner_names},
          {"strategies", strategy_names},
          {"policies", policy_names},
          {"seed", plan.seed},
          {"grid_preset", learners::to_string(plan.preset)},
          {"replication_screening", plan.replication_screening},
          {"screen_cutoff", plan.screen_cutoff},
          {"folds", plan.folds},
          {"calibration_bins", plan.calibration_bins}};
}

SchemaAlignment align_schemas(const std::vector<std::string>& source, const std::vector<std::string>& target) {
  const std::set<std::string> s(source.begin(), source.end()), t(target.begin(), target.end());
  SchemaAlignment a;
  for (const auto& c : source) (t.count(c) ? a.shared : a.dropped_from_source).push_back(c);
  for (const auto& c : target)
    if (!s.count(c)) a.dropped_from_target.push_back(c);
  return a;
}

MetricReport make_report(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels, double threshold) {
  MetricReport r;
  r.auc = tuneval::auc_rank(p, labels);
  const auto cm = tuneval::confusion(p, labels, threshold);
  const auto m = tuneval::metrics_from_confusion(cm);
  r.acc = m.accuracy;
  r.sens = m.sensitivity;
  r.spec = m.specificity;
  r.f1 = m.f1;
  r.kappa = m.kappa;
  r.threshold = threshold;
  r.n_flagged = static_cast<int>(cm.tp + cm.fp);
  return r;
}

CellOutcome run_cell(const CourseData& course, const ExperimentPlan& plan, int week, LearnerKind learner,
                     Strategy strategy, const std::optional<std::vector<std::string>>& restrict_to) {
  const auto& weekly = course.cohort.features;
  const Vector& y = course.cohort.labels;
  CellOutcome cell;
  cell.week = week;
  cell.learner = learner;
  cell.strategy = strategy;

  FeatureFrame frame = aggregate::aggregate(weekly, strategy, week).frame;
  if (restrict_to) frame = frame.select(*restrict_to);
  cell.candidate_features = frame.columns;
  std::optional<std::vector<features::Family>> forced;
  if (plan.replication_screening) forced = features::replication_exclusions();
  auto screen = features::screen_collinear(frame, plan.screen_cutoff, forced);
  cell.dropped = std::move(screen.dropped);
  cell.constant_columns = std::move(screen.constant_columns);
  if (screen.frame.cols() == 0) throw FitError("no usable features after screening");

  const auto folds = tuneval::stratified_kfold(y, plan.folds, derive_seed(plan.seed, kFoldStream));
  const auto grid =
      learners::configurations(learners::make_grid(plan.preset, static_cast<int>(screen.frame.cols())), learner);
  tuneval::SearchOptions options;
  options.seed = cell_seed(plan.seed, week, learner, kSearchStream);
  cell.search = tuneval::grid_search_cv(screen.frame.values, y, grid, folds, options);

  cell.model = train_model(screen.frame, y, cell.search.best, cell_seed(plan.seed, week, learner, kModelStream));
  cell.model.cv_auc = cell.search.best_auc;
  cell.in_sample = predict_proba(cell.model, screen.frame.values);
  cell.model.threshold = tuneval::youden_threshold(cell.in_sample, y).value;

  cell.report = make_report(cell.in_sample, y, cell.model.threshold);
  cell.report.reference = cell.report.target = course.name;
  cell.report.week = week;
  cell.report.learner = learner;
  cell.report.strategy = strategy;
  cell.report.policy = ThresholdPolicy::youden_source;

  const auto rows = valid_rows(cell.search.oof);
  try {
    cell.platt = calibrate::fit_platt(take(cell.search.oof, rows), take(y, rows));
  } catch (const Error&) {
    cell.platt.reset();
  }
  return cell;
}

WeeklyRun run_weekly_pipeline(const CourseData& course, const ExperimentPlan& plan) {
  std::vector<int> weeks = plan.weeks;
  if (weeks.empty())
    for (int w = 1; w <= course.cohort.features.n_weeks(); ++w) weeks.push_back(w);

  struct Job {
    int week;
    LearnerKind learner;
    Strategy strategy;
    std::ptrdiff_t copy_of = -1;  // early-reset cells before the reset week equal progressive ones
  };
  std::vector<Job> jobs;
  for (int week : weeks)
    for (auto learner : plan.learners) {
      std::ptrdiff_t progressive = -1;
      for (auto strategy : plan.strategies) {
        Job job{week, learner, strategy};
        if (strategy == Strategy::progressive) progressive = static_cast<std::ptrdiff_t>(jobs.size());
        if (strategy == Strategy::early_reset && week < aggregate::kResetWeek) job.copy_of = progressive;
        jobs.push_back(job);
      }
    }

  std::vector<std::optional<CellOutcome>> outcomes(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto run = [&](std::size_t i) {
    try {
      outcomes[i] = run_cell(course, plan, jobs[i].week, jobs[i].learner, jobs[i].strategy);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  std::vector<std::size_t> primary;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (jobs[i].copy_of < 0) primary.push_back(i);
  parallel_for(primary.size(), plan.jobs, [&](std::size_t k) { run(primary[k]); });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].copy_of >= 0) {
      const auto src = static_cast<std::size_t>(jobs[i].copy_of);
      outcomes[i] = outcomes[src];
      errors[i] = errors[src];
      if (outcomes[i]) {
        outcomes[i]->strategy = jobs[i].strategy;
        outcomes[i]->report.strategy = jobs[i].strategy;
      }
    }
  }
  WeeklyRun out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (outcomes[i]) {
      out.cells.push_back(std::move(*outcomes[i]));
    } else {
      out.failures.push_back({course.name, course.name, jobs[i].week, jobs[i].learner, jobs[i].strategy, errors[i]});
    }
  }
  return out;
}

TransferOutcome transfer_evaluate(const CourseData& reference, const CellOutcome& cell, const CourseData& target,
                                  const ExperimentPlan& plan) {
  const auto& tw = target.cohort.features;
  if (cell.week > tw.n_weeks())
    throw RangeError(fmt::format("target course has no week {}", cell.week));
  const FeatureFrame frame = aggregate::aggregate(tw, cell.strategy, cell.week).frame;

  TransferOutcome out;
  out.alignment = align_schemas(cell.candidate_features, frame.columns);
  if (out.alignment.shared.empty()) throw SchemaError("transfer impossible: no shared features");
  std::optional<CellOutcome> retrained;
  const CellOutcome* used = &cell;
  if (!out.alignment.dropped_from_source.empty()) {
    retrained = run_cell(reference, plan, cell.week, cell.learner, cell.strategy, out.alignment.shared);
    used = &*retrained;
    out.retrained = true;
  }

  out.probabilities = predict_proba(used->model, frame);
  const Vector& y = target.cohort.labels;
  for (auto policy : plan.policies) {
    const double threshold = policy == ThresholdPolicy::youden_source
                                 ? used->model.threshold
                                 : tuneval::prevalence_threshold(out.probabilities, target.prevalence()).value;
    auto r = make_report(out.probabilities, y, threshold);
    r.reference = reference.name;
    r.target = target.name;
    r.week = cell.week;
    r.learner = cell.learner;
    r.strategy = cell.strategy;
    r.policy = policy;
    out.reports.push_back(r);
  }
  out.calibration = calibration_records(out.probabilities, y, used->platt, plan);
  for (auto& c : out.calibration) {
    c.reference = reference.name;
    c.target = target.name;
    c.week = cell.week;
    c.learner = cell.learner;
    c.strategy = cell.strategy;
  }
  return out;
}

std::vector<ImportanceRow> importance_report(const CourseData& course, const std::vector<CellOutcome>& cells,
                                             const ExperimentPlan& plan) {
  std::vector<ImportanceRow> out;
  for (const auto& cell : cells) {
    const FeatureFrame frame = aggregate::aggregate(course.cohort.features, cell.strategy, cell.week).frame;
    const auto ranked = ranked_importance(cell.model, frame, course.cohort.labels,
                                          cell_seed(plan.seed, cell.week, cell.learner, kImportanceStream));
    int rank = 0;
    for (const auto& r : ranked) {
      if (cell.learner == LearnerKind::elastic_net && r.score == 0.0) continue;
      out.push_back({course.name, cell.week, cell.learner, cell.strategy, ++rank, r.feature, r.score});
    }
  }
  return out;
}

ExperimentResult run_experiment(const CourseData& reference, const std::vector<CourseData>& targets,
                                const ExperimentPlan& plan) {
  for (const auto& t : targets)
    if (t.name == reference.name) throw ParameterError("reference course '" + t.name + "' is also a target");
  ExperimentResult result;
  auto weekly = run_weekly_pipeline(reference, plan);
  result.attempted = static_cast<int>(weekly.cells.size() + weekly.failures.size());
  result.failures = weekly.failures;
  for (const auto& cell : weekly.cells) {
    result.reports.push_back(cell.report);
    const auto rows = valid_rows(cell.search.oof);
    auto records = calibration_records(take(cell.search.oof, rows), take(reference.cohort.labels, rows), cell.platt,
                                       plan);
    for (auto& c : records) {
      c.reference = c.target = reference.name;
      c.week = cell.week;
      c.learner = cell.learner;
      c.strategy = cell.strategy;
      result.calibration.push_back(std::move(c));
    }
  }

  for (const auto& target : targets) {
    std::set<std::pair<int, Strategy>> aligned;
    for (const auto& f : weekly.failures) {
      ++result.attempted;
      result.failures.push_back({reference.name, target.name, f.week, f.learner, f.strategy, "reference cell failed"});
    }
    for (const auto& cell : weekly.cells) {
      ++result.attempted;
      try {
        auto t = transfer_evaluate(reference, cell, target, plan);
        for (auto& r : t.reports) result.reports.push_back(r);
        for (auto& c : t.calibration) result.calibration.push_back(std::move(c));
        if (aligned.insert({cell.week, cell.strategy}).second) {
          const auto add = [&](const std::vector<std::string>& names, const char* status) {
            for (const auto& n : names)
              result.alignment.push_back({reference.name, target.name, cell.week, cell.strategy, n, status});
          };
          add(t.alignment.shared, "shared");
          add(t.alignment.dropped_from_source, "source_only");
          add(t.alignment.dropped_from_target, "target_only");
        }
      } catch (const std::exception& e) {
        result.failures.push_back({reference.name, target.name, cell.week, cell.learner, cell.strategy, e.what()});
      }
    }
  }
  result.importance = importance_report(reference, weekly.cells, plan);
  result.cells = std::move(weekly.cells);
  return result;
}

nlohmann::json make_manifest(const CourseData& reference, const std::vector<CourseData>& targets,
                             const ExperimentPlan& plan) {
  nlohmann::json inputs = nlohmann::json::array();
  inputs.push_back({{"course", reference.name}, {"role", "reference"}, {"fingerprint", reference.fingerprint}});
  for (const auto& t : targets)
    inputs.push_back({{"course", t.name}, {"role", "target"}, {"fingerprint", t.fingerprint}});
  auto grid = learners::grid_to_json(learners::make_grid(plan.preset, 1));
  grid["rf_mtry"] = "integers around floor(sqrt(p)) for the screened feature count p of each cell";
  const auto plan_json = plan_to_json(plan);
  return {{"tool", "earlywarn"},
          {"version", "0.1.0"},
          {"seed", plan.seed},
          {"plan", plan_json},
          {"grid", grid},
          {"inputs", inputs},
          {"config_hash", hex(fnv1a64(plan_json.dump() + inputs.dump()))}};
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string results_csv(const std::vector<MetricReport>& reports) {
  std::string s = std::string(kResultsHeader) + "\n";
  for (const auto& r : reports)
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.reference), csv_field(r.target), r.week,
                     learners::to_string(r.learner), aggregate::to_string(r.strategy), tuneval::to_string(r.policy),
                     format_number(r.auc), format_number(r.acc), format_number(r.sens), format_number(r.spec),
                     format_number(r.f1), format_number(r.kappa), format_number(r.threshold), r.n_flagged);
  return s;
}

void write_results(const fs::path& dir, const ExperimentResult& result) {
  fs::create_directories(dir / "calibration");
  fs::create_directories(dir / "models");
  write_atomically(dir / "results.csv", results_csv(result.reports));

  std::string imp = "reference,week,learner,strategy,rank,feature,score\n";
  for (const auto& r : result.importance)
    imp += fmt::format("{},{},{},{},{},{},{}\n", csv_field(r.reference), r.week, learners::to_string(r.learner),
                       aggregate::to_string(r.strategy), r.rank, r.feature, format_number(r.score));
  write_atomically(dir / "importance.csv", imp);

  std::string align = "reference,target,week,strategy,feature,status\n";
  for (const auto& a : result.alignment)
    align += fmt::format("{},{},{},{},{},{}\n", csv_field(a.reference), csv_field(a.target), a.week,
                         aggregate::to_string(a.strategy), a.feature, a.status);
  write_atomically(dir / "alignment.csv", align);

  std::string cells =
      "reference,week,learner,strategy,n_candidates,n_features,cv_auc,skipped_folds,params,threshold,platt_A,platt_B\n";
  std::string screening = "reference,week,strategy,feature,partner,correlation\n";
  std::set<std::pair<int, aggregate::Strategy>> screened;
  for (const auto& c : result.cells) {
    cells += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(c.report.reference), c.week,
                         learners::to_string(c.learner), aggregate::to_string(c.strategy), c.candidate_features.size(),
                         c.model.features.size(), format_number(c.search.best_auc), c.search.skipped_folds.size(),
                         csv_field(learners::describe(c.search.best)), format_number(c.model.threshold),
                         c.platt ? format_number(c.platt->A) : "NaN", c.platt ? format_number(c.platt->B) : "NaN");
    if (screened.insert({c.week, c.strategy}).second) {
      for (const auto& d : c.dropped)
        screening += fmt::format("{},{},{},{},{},{}\n", csv_field(c.report.reference), c.week,
                                 aggregate::to_string(c.strategy), d.feature, d.partner, format_number(d.correlation));
      for (const auto& k : c.constant_columns)
        screening += fmt::format("{},{},{},{},constant,NaN\n", csv_field(c.report.reference), c.week,
                                 aggregate::to_string(c.strategy), k);
    }
    write_atomically(dir / "models" / (c.report.reference + "__" + cell_name(c.week, c.learner, c.strategy) + ".json"),
                     model_to_json(c.model).dump(1) + "\n");
  }
  write_atomically(dir / "cells.csv", cells);
  write_atomically(dir / "screening.csv", screening);

  std::string fails = "reference,target,week,learner,strategy,message\n";
  for (const auto& f : result.failures)
    fails += fmt::format("{},{},{},{},{},{}\n", csv_field(f.reference), csv_field(f.target), f.week,
                         learners::to_string(f.learner), aggregate::to_string(f.strategy), csv_field(f.message));
  write_atomically(dir / "failures.csv", fails);

  std::string summary = "reference,target,week,learner,strategy,stage,slope,intercept,brier,log_loss,platt_A,platt_B\n";
  std::map<std::string, std::string> curves;
  for (const auto& c : result.calibration) {
    const bool has_platt = c.stage == "platt" || c.platt.iterations > 0;
    summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(c.reference), csv_field(c.target), c.week,
                           learners::to_string(c.learner), aggregate::to_string(c.strategy), c.stage,
                           format_number(c.curve.slope), format_number(c.curve.intercept),
                           format_number(c.curve.brier), format_number(c.curve.log_loss),
                           has_platt ? format_number(c.platt.A) : "NaN", has_platt ? format_number(c.platt.B) : "NaN");
    const auto name = c.reference + "__" + c.target + "__" + cell_name(c.week, c.learner, c.strategy) + ".csv";
    auto& body = curves[name];
    if (body.empty()) body = "stage,bin,mean_predicted,observed,count\n";
    for (std::size_t b = 0; b < c.curve.bins.size(); ++b)
      body += fmt::format("{},{},{},{},{}\n", c.stage, b + 1, format_number(c.curve.bins[b].mean_predicted),
                          format_number(c.curve.bins[b].observed), c.curve.bins[b].count);
  }
  write_atomically(dir / "calibration_summary.csv", summary);
  for (const auto& [name, body] : curves) write_atomically(dir / "calibration" / name, body);
}

}  // namespace ew::transfer
