#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "earlywarn/types.hpp"

namespace ew::trace {

enum class EventKind { submission, page_view, slide_download, forum_click };
enum class TaskClass { digital_incentivized, digital_nonincentivized, paper };
enum class IncentivePolicy { bonus_points, exam_admission };
enum class DeadlineWindow { before_deadline, week_after_deadline };

std::string to_string(EventKind k);
std::string to_string(TaskClass c);
std::string to_string(IncentivePolicy p);
std::optional<EventKind> event_kind_from_string(std::string_view s);
std::optional<TaskClass> task_class_from_string(std::string_view s);

struct RawEvent {
  std::string student_id;
  Instant timestamp;
  EventKind kind = EventKind::page_view;
  std::string object_id;
  std::optional<TaskClass> task_class;
  std::optional<bool> correct;
  std::optional<double> points;

  bool operator==(const RawEvent&) const = default;
};

struct PageSpec {
  std::string page_id;
  int task_count = 1;
};

// Task objects are addressed as "<page_id>/<k>" with k in 1..task_count;
// page views may address either the page or one of its tasks.
struct AssignmentSpec {
  std::string assignment_id;
  TaskClass task_class = TaskClass::digital_incentivized;
  Date release_date;
  Instant deadline;
  std::vector<PageSpec> pages;
  std::optional<double> max_points;

  int total_tasks() const;
};

struct CourseConfig {
  std::string course_id;
  Date start_date;
  int n_weeks = 12;
  std::vector<AssignmentSpec> assignments;
  IncentivePolicy incentive_policy = IncentivePolicy::bonus_points;
  bool slide_forum_available = true;

  Instant start() const { return Instant{start_date}; }
  Instant end() const { return start() + kWeek * n_weeks; }
  // Earliest/latest timestamps accepted in an event log.
  Instant earliest_event() const { return start() - kWeek; }
  Instant latest_event() const { return end() + 4 * kWeek; }

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

CourseConfig parse_course_config(const std::string& json_text);
CourseConfig load_course_config(const std::filesystem::path& path);
std::string course_config_to_json(const CourseConfig& config);

struct Session {
  std::string student_id;
  std::vector<RawEvent> events;
  Instant start;
  Instant end;
};

// A gap strictly longer than this starts a new session.
inline constexpr Seconds kSessionGap{90 * 60};

// Resolves object ids of a course to (assignment, page, task).
struct ObjectRef {
  std::size_t assignment = 0;
  std::size_t page = 0;
  int task = -1;  // -1 when the object is the page itself
};

class ObjectIndex {
 public:
  explicit ObjectIndex(const CourseConfig& config);
  const ObjectRef* find(const std::string& object_id) const;

 private:
  std::unordered_map<std::string, ObjectRef> refs_;
};

std::vector<RawEvent> parse_event_log(std::istream& in, const CourseConfig& config);
std::vector<RawEvent> parse_event_log(const std::filesystem::path& path, const CourseConfig& config);
void write_event_log(std::ostream& out, std::span<const RawEvent> events);

inline constexpr const char* kEventLogHeader =
    "student_id,timestamp,kind,object_id,task_class,correct,points";

// Groups one student's time-ordered events; an empty input yields no sessions.
std::vector<Session> sessionize(std::span<const RawEvent> events);

// 1-based course week of an instant; weeks start at 00:00 UTC on start_date.
int assign_week(Instant t, const CourseConfig& config);

std::optional<DeadlineWindow> window_of(const RawEvent& event, const AssignmentSpec& spec);

// Grade files: header "student_id,grade", one row per student.
std::map<std::string, double> parse_grades(std::istream& in);
std::map<std::string, double> load_grades(const std::filesystem::path& path);
void write_grades(std::ostream& out, const std::map<std::string, double>& grades);

}  // namespace ew::trace
