#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "earlywarn/feature_id.hpp"
#include "earlywarn/frame.hpp"
#include "earlywarn/trace.hpp"
#include "earlywarn/types.hpp"

namespace ew::features {

// Weekly indicator values for a cohort. weeks[w - 1] is students x columns.
struct WeeklyFeatures {
  std::vector<std::string> students;
  std::vector<FeatureId> columns;
  std::vector<Matrix> weeks;

  int n_weeks() const { return static_cast<int>(weeks.size()); }
  // Values of one student in week w as a column-name keyed map.
  std::map<std::string, double> row(std::size_t student, int week) const;
};

// eng2 lead time is averaged over first interactions per assignment page
// (any event) or per task (first submission of each task).
enum class Eng2Anchor { page, task };

struct ExtractOptions {
  bool emit_per1_duplicate = false;
  Eng2Anchor eng2_anchor = Eng2Anchor::page;
};

// The pre-screening column set for a course. Timing indicators (eng2/3/4/6)
// exist only before the deadline; dwell-based families only for digital
// tasks; performance families only for paper tasks before the deadline.
std::vector<FeatureId> weekly_layout(const trace::CourseConfig& config,
                                     const ExtractOptions& options = {});

// Rows for one student: n_weeks x layout.size(). Events must be the
// student's own, time ordered; sessions must partition them.
//
// Activity on an assignment is reported in the week of its deadline (redu1)
// or in the following week (redu2); events more than a week past the deadline
// are ignored. Course-level clicks are reported in the week they occur.
Matrix extract_student_weeks(std::span<const trace::RawEvent> events,
                             std::span<const trace::Session> sessions,
                             const trace::CourseConfig& config, const trace::ObjectIndex& objects,
                             const std::vector<FeatureId>& layout, const ExtractOptions& options = {});

// Whole cohort. Students without events receive all-zero rows; events from
// students not listed are ignored. An empty list means "every student seen".
WeeklyFeatures extract_weekly_features(std::span<const trace::RawEvent> events,
                                       const trace::CourseConfig& config,
                                       std::vector<std::string> students = {},
                                       const ExtractOptions& options = {});

// Long format: student_id,week,<columns...>
void write_weekly_csv(std::ostream& out, const WeeklyFeatures& weekly);
WeeklyFeatures read_weekly_csv(std::istream& in);

inline constexpr double kAtRiskGrade = 3.7;

bool is_valid_grade(double grade);
// Throws DomainError for grades outside {0.7, 1.0, 1.3, ..., 4.0, 5.0}.
bool label_at_risk(double grade);

struct LabeledCohort {
  WeeklyFeatures features;
  Vector labels;  // 1 = at risk, aligned with features.students
  Vector grades;
};

LabeledCohort make_labeled_cohort(WeeklyFeatures features, const std::map<std::string, double>& grades);

struct DropRecord {
  std::string feature;
  std::string partner;  // "forced" for replication exclusions
  double correlation = 0.0;
};

struct ScreenResult {
  FeatureFrame frame;
  std::vector<DropRecord> dropped;
  std::vector<std::string> constant_columns;
};

// The six exclusions applied in the original study, as families.
const std::vector<Family>& replication_exclusions();

// Removes one feature of every pair with |Pearson r| > cutoff. Within a pair the
// feature with the larger mean |r| to the remaining features goes; exact ties
// drop the name that sorts later. Constant columns are kept and reported.
ScreenResult screen_collinear(const FeatureFrame& frame, double cutoff = 0.90,
                              const std::optional<std::vector<Family>>& forced = std::nullopt);

}  // namespace ew::features
