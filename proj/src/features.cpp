#include "earlywarn/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "earlywarn/errors.hpp"

namespace ew::features {

using trace::AssignmentSpec;
using trace::CourseConfig;
using trace::EventKind;
using trace::RawEvent;
using trace::Session;
using trace::TaskClass;

namespace {

constexpr Seconds kDwellCap{30 * 60};

ClassCell cell_of(TaskClass c) {
  switch (c) {
    case TaskClass::digital_incentivized: return ClassCell::I;
    case TaskClass::digital_nonincentivized: return ClassCell::NI;
    case TaskClass::paper: return ClassCell::P;
  }
  return ClassCell::I;
}

bool applicable(Family f, ClassCell c, Window w) {
  const bool digital = c == ClassCell::I || c == ClassCell::NI;
  switch (f) {
    case Family::eng2:
    case Family::eng3:
    case Family::eng4:
    case Family::eng6: return w == Window::redu1;
    case Family::eng5:
    case Family::eng7:
    case Family::eng8: return digital;
    case Family::per1:
    case Family::per2:
    case Family::per3:
    case Family::per4:
    case Family::per1dup: return c == ClassCell::P && w == Window::redu1;
    case Family::lecture_clicks:
    case Family::forum: return false;
    default: return true;
  }
}

constexpr std::array<Family, 17> kTaskFamilies = {
    Family::eng1, Family::eng2, Family::eng3, Family::eng4,  Family::eng5, Family::eng6,
    Family::eng7, Family::eng8, Family::eng9, Family::eng10, Family::per1, Family::per2,
    Family::per3, Family::per4, Family::per1dup, Family::par1, Family::par2};

struct CellKey {
  int week;
  ClassCell cls;
  Window window;
  bool operator==(const CellKey&) const = default;
};

std::size_t cell_slot(const CellKey& k) {
  return (static_cast<std::size_t>(k.week - 1) * 3 + static_cast<std::size_t>(k.cls)) * 2 +
         static_cast<std::size_t>(k.window);
}

struct EventInfo {
  std::size_t index;
  const trace::ObjectRef* ref;
};

}  // namespace

std::map<std::string, double> WeeklyFeatures::row(std::size_t student, int week) const {
  std::map<std::string, double> out;
  const auto& m = weeks.at(static_cast<std::size_t>(week - 1));
  for (std::size_t j = 0; j < columns.size(); ++j)
    out[columns[j].to_string()] = m(static_cast<Eigen::Index>(student), static_cast<Eigen::Index>(j));
  return out;
}

std::vector<FeatureId> weekly_layout(const CourseConfig& config, const ExtractOptions& options) {
  std::vector<FeatureId> layout;
  for (ClassCell c : {ClassCell::I, ClassCell::NI, ClassCell::P}) {
    for (Window w : {Window::redu1, Window::redu2}) {
      for (Family f : kTaskFamilies) {
        if (f == Family::per1dup && !options.emit_per1_duplicate) continue;
        if (applicable(f, c, w)) layout.push_back({f, c, w});
      }
    }
  }
  if (config.slide_forum_available) {
    layout.push_back({Family::lecture_clicks, ClassCell::course_level, Window::na});
    layout.push_back({Family::forum, ClassCell::course_level, Window::na});
  }
  return layout;
}

Matrix extract_student_weeks(std::span<const RawEvent> events, std::span<const Session> sessions,
                             const CourseConfig& config, const trace::ObjectIndex& objects,
                             const std::vector<FeatureId>& layout, const ExtractOptions& options) {
  const int n_weeks = config.n_weeks;
  Matrix out = Matrix::Zero(n_weeks, static_cast<Eigen::Index>(layout.size()));

  std::unordered_map<std::string, Eigen::Index> column;
  for (std::size_t j = 0; j < layout.size(); ++j)
    column[layout[j].to_string()] = static_cast<Eigen::Index>(j);
  auto put = [&](int week, Family f, ClassCell c, Window w, double v) {
    auto it = column.find(FeatureId{f, c, w}.to_string());
    if (it != column.end()) out(week - 1, it->second) = v;
  };

  // Session id and capped dwell for every event.
  std::vector<int> session_of(events.size(), 0);
  {
    std::size_t pos = 0;
    for (std::size_t s = 0; s < sessions.size(); ++s)
      for (std::size_t k = 0; k < sessions[s].events.size(); ++k) session_of.at(pos++) = static_cast<int>(s);
    if (pos != events.size()) throw DomainError("sessions do not partition the event list");
  }
  std::vector<double> dwell_minutes(events.size(), 0.0);
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    if (session_of[i] == session_of[i + 1]) {
      const auto gap = std::min(events[i + 1].timestamp - events[i].timestamp, kDwellCap);
      dwell_minutes[i] = static_cast<double>(gap.count()) / 60.0;
    }
  }

  // Earliest correct submission per (assignment, page), over all of the student's events.
  std::map<std::pair<std::size_t, std::size_t>, Instant> first_correct;
  std::vector<const trace::ObjectRef*> refs(events.size(), nullptr);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.kind != EventKind::submission && e.kind != EventKind::page_view) continue;
    const auto* ref = objects.find(e.object_id);
    if (!ref) throw ConfigError("event references unknown object '" + e.object_id + "'");
    const auto& spec = config.assignments[ref->assignment];
    if (e.task_class && *e.task_class != spec.task_class)
      throw ConfigError("task_class of event on '" + e.object_id + "' disagrees with assignment '" +
                        spec.assignment_id + "'");
    if (e.kind == EventKind::submission && ref->task < 0)
      throw ConfigError("submission on '" + e.object_id + "' does not name a task");
    refs[i] = ref;
    if (e.kind == EventKind::submission && e.correct.value_or(false)) {
      auto key = std::make_pair(ref->assignment, ref->page);
      auto it = first_correct.find(key);
      if (it == first_correct.end() || e.timestamp < it->second) first_correct[key] = e.timestamp;
    }
  }

  // Bucket task events into (week, class, window) cells.
  const std::size_t n_slots = static_cast<std::size_t>(n_weeks) * 6;
  std::vector<std::vector<std::size_t>> bucket(n_slots);
  std::vector<std::vector<std::size_t>> cell_assignments(n_slots);
  for (std::size_t a = 0; a < config.assignments.size(); ++a) {
    const auto& spec = config.assignments[a];
    const int due_week = trace::assign_week(spec.deadline, config);
    const ClassCell c = cell_of(spec.task_class);
    cell_assignments[cell_slot({due_week, c, Window::redu1})].push_back(a);
    if (due_week < n_weeks) cell_assignments[cell_slot({due_week + 1, c, Window::redu2})].push_back(a);
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!refs[i]) continue;
    const auto& spec = config.assignments[refs[i]->assignment];
    const int due_week = trace::assign_week(spec.deadline, config);
    const ClassCell c = cell_of(spec.task_class);
    if (events[i].timestamp <= spec.deadline) {
      bucket[cell_slot({due_week, c, Window::redu1})].push_back(i);
    } else if (events[i].timestamp <= spec.deadline + kWeek && due_week < n_weeks) {
      bucket[cell_slot({due_week + 1, c, Window::redu2})].push_back(i);
    }
  }

  for (int week = 1; week <= n_weeks; ++week) {
    for (ClassCell c : {ClassCell::I, ClassCell::NI, ClassCell::P}) {
      for (Window w : {Window::redu1, Window::redu2}) {
        const std::size_t slot = cell_slot({week, c, w});
        const auto& assigned = cell_assignments[slot];
        if (assigned.empty()) continue;
        const auto& cell = bucket[slot];

        int n_pages = 0, n_tasks = 0;
        for (auto a : assigned) {
          n_pages += static_cast<int>(config.assignments[a].pages.size());
          n_tasks += config.assignments[a].total_tasks();
        }

        double submissions = 0, dwell = 0, dwell_after = 0;
        bool last_day_submission = false, early_interaction = false, after_success = false;
        bool any_submission = false, all_early = true;
        std::set<std::pair<std::size_t, std::size_t>> touched_pages, submitted_pages;
        std::map<std::tuple<std::size_t, std::size_t, int>, Instant> first_touch;
        // (assignment, page, task) -> (submitted, correct, best points)
        struct TaskState {
          bool correct = false;
          double points = 0.0;
        };
        std::map<std::tuple<std::size_t, std::size_t, int>, TaskState> tasks;
        std::set<Date> days;
        std::set<int> session_ids;

        for (std::size_t i : cell) {
          const auto& e = events[i];
          const auto* ref = refs[i];
          const auto& spec = config.assignments[ref->assignment];
          const auto page = std::make_pair(ref->assignment, ref->page);
          const Instant last_day = spec.deadline - kDay;
          dwell += dwell_minutes[i];
          days.insert(std::chrono::floor<std::chrono::days>(e.timestamp));
          session_ids.insert(session_of[i]);
          if (e.timestamp <= last_day) early_interaction = true;
          if (options.eng2_anchor == Eng2Anchor::page || e.kind == EventKind::submission) {
            const int task = options.eng2_anchor == Eng2Anchor::page ? -1 : ref->task;
            const auto key = std::make_tuple(ref->assignment, ref->page, task);
            auto ft = first_touch.find(key);
            if (ft == first_touch.end() || e.timestamp < ft->second) first_touch[key] = e.timestamp;
          }
          auto fc = first_correct.find(page);
          if (fc != first_correct.end() && e.timestamp > fc->second) {
            after_success = true;
            dwell_after += dwell_minutes[i];
          }
          if (e.kind == EventKind::submission) {
            submissions += 1;
            any_submission = true;
            if (e.timestamp > last_day) {
              last_day_submission = true;
              all_early = false;
            }
            submitted_pages.insert(page);
            auto& ts = tasks[{ref->assignment, ref->page, ref->task}];
            ts.correct = ts.correct || e.correct.value_or(false);
            ts.points = std::max(ts.points, e.points.value_or(0.0));
          }
          touched_pages.insert(page);
        }

        double lead_sum = 0;
        for (const auto& [key, t] : first_touch) {
          const auto& spec = config.assignments[std::get<0>(key)];
          lead_sum += std::max(0.0, static_cast<double>((spec.deadline - t).count()) / 86400.0);
        }
        const double lead = first_touch.empty() ? 0.0 : lead_sum / static_cast<double>(first_touch.size());

        // Page-level performance.
        int correct_pages = 0, correct_tasks = 0, started_tasks = 0, started_correct = 0;
        double weighted_num = 0, weighted_den = 0;
        for (auto a : assigned) {
          const auto& spec = config.assignments[a];
          double assignment_num = 0;
          for (std::size_t p = 0; p < spec.pages.size(); ++p) {
            int page_correct = 0;
            double page_points = 0;
            for (int k = 0; k < spec.pages[p].task_count; ++k) {
              auto it = tasks.find({a, p, k});
              if (it != tasks.end() && it->second.correct) ++page_correct;
              if (it != tasks.end()) page_points += it->second.points;
            }
            correct_tasks += page_correct;
            const bool full = page_correct == spec.pages[p].task_count;
            if (full) {
              ++correct_pages;
              assignment_num += spec.max_points ? page_points : spec.pages[p].task_count;
            }
            if (submitted_pages.count({a, p})) {
              started_tasks += spec.pages[p].task_count;
              started_correct += page_correct;
            }
          }
          weighted_num += assignment_num;
          weighted_den += spec.max_points ? *spec.max_points : spec.total_tasks();
        }
        int submitted_tasks = static_cast<int>(tasks.size());

        put(week, Family::eng1, c, w, submissions);
        put(week, Family::eng2, c, w, lead);
        put(week, Family::eng3, c, w, last_day_submission ? 1.0 : 0.0);
        put(week, Family::eng4, c, w, any_submission && all_early ? 1.0 : 0.0);
        put(week, Family::eng5, c, w, dwell);
        put(week, Family::eng6, c, w, early_interaction ? 1.0 : 0.0);
        put(week, Family::eng7, c, w, after_success ? 1.0 : 0.0);
        put(week, Family::eng8, c, w, dwell_after);
        put(week, Family::eng9, c, w, static_cast<double>(days.size()));
        put(week, Family::eng10, c, w, static_cast<double>(session_ids.size()));
        const double per1 = static_cast<double>(correct_pages) / n_pages;
        put(week, Family::per1, c, w, per1);
        put(week, Family::per1dup, c, w, per1);
        put(week, Family::per2, c, w, static_cast<double>(correct_tasks) / n_tasks);
        put(week, Family::per3, c, w,
            started_tasks > 0 ? static_cast<double>(started_correct) / started_tasks : 0.0);
        put(week, Family::per4, c, w,
            weighted_den > 0 ? std::clamp(weighted_num / weighted_den, 0.0, 1.0) : 0.0);
        put(week, Family::par1, c, w, static_cast<double>(submitted_tasks) / n_tasks);
        put(week, Family::par2, c, w, static_cast<double>(submitted_pages.size()) / n_pages);
      }
    }
  }

  if (config.slide_forum_available) {
    for (const auto& e : events) {
      if (e.kind != EventKind::slide_download && e.kind != EventKind::forum_click) continue;
      if (e.timestamp < config.start() || e.timestamp >= config.end()) continue;
      const int week = trace::assign_week(e.timestamp, config);
      const Family f = e.kind == EventKind::slide_download ? Family::lecture_clicks : Family::forum;
      auto it = column.find(FeatureId{f, ClassCell::course_level, Window::na}.to_string());
      if (it != column.end()) out(week - 1, it->second) += 1.0;
    }
  }
  return out;
}

WeeklyFeatures extract_weekly_features(std::span<const RawEvent> events, const CourseConfig& config,
                                       std::vector<std::string> students,
                                       const ExtractOptions& options) {
  WeeklyFeatures wf;
  wf.columns = weekly_layout(config, options);
  if (students.empty()) {
    std::set<std::string> seen;
    for (const auto& e : events) seen.insert(e.student_id);
    students.assign(seen.begin(), seen.end());
  }
  std::sort(students.begin(), students.end());
  students.erase(std::unique(students.begin(), students.end()), students.end());
  wf.students = students;
  const auto n = static_cast<Eigen::Index>(students.size());
  const auto p = static_cast<Eigen::Index>(wf.columns.size());
  wf.weeks.assign(static_cast<std::size_t>(config.n_weeks), Matrix::Zero(n, p));

  // Events arrive grouped by student; copy and order each group defensively.
  std::map<std::string, std::vector<RawEvent>> by_student;
  for (const auto& e : events) by_student[e.student_id].push_back(e);
  const trace::ObjectIndex objects(config);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = by_student.find(students[static_cast<std::size_t>(i)]);
    if (it == by_student.end()) continue;
    auto& evs = it->second;
    std::stable_sort(evs.begin(), evs.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timestamp < b.timestamp; });
    const auto sessions = trace::sessionize(evs);
    const Matrix rows = extract_student_weeks(evs, sessions, config, objects, wf.columns, options);
    for (int w = 0; w < config.n_weeks; ++w) wf.weeks[static_cast<std::size_t>(w)].row(i) = rows.row(w);
  }
  return wf;
}

void write_weekly_csv(std::ostream& out, const WeeklyFeatures& weekly) {
  out << "student_id,week";
  for (const auto& c : weekly.columns) out << ',' << c.to_string();
  out << '\n';
  for (std::size_t i = 0; i < weekly.students.size(); ++i) {
    for (int w = 1; w <= weekly.n_weeks(); ++w) {
      out << weekly.students[i] << ',' << w;
      const auto& m = weekly.weeks[static_cast<std::size_t>(w - 1)];
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out << ',' << format_number(m(static_cast<Eigen::Index>(i), j));
      out << '\n';
    }
  }
}

WeeklyFeatures read_weekly_csv(std::istream& in) {
  WeeklyFeatures wf;
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::map<int, std::vector<double>>> rows;
  int max_week = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (lineno == 1) {
      if (cells.size() < 2 || cells[0] != "student_id" || cells[1] != "week")
        throw ParseError(lineno, "weekly feature header must start with student_id,week");
      try {
        for (std::size_t j = 2; j < cells.size(); ++j) wf.columns.push_back(FeatureId::parse(cells[j]));
      } catch (const DomainError& e) {
        throw ParseError(lineno, e.what());
      }
      continue;
    }
    if (cells.size() != wf.columns.size() + 2) throw ParseError(lineno, "column count does not match header");
    std::vector<double> v;
    int week = 0;
    try {
      week = static_cast<int>(parse_number(cells[1]));
      for (std::size_t j = 2; j < cells.size(); ++j) v.push_back(parse_number(cells[j]));
    } catch (const DomainError& e) {
      throw ParseError(lineno, e.what());
    }
    if (week < 1) throw ParseError(lineno, "week must be positive");
    max_week = std::max(max_week, week);
    rows[cells[0]][week] = std::move(v);
  }
  for (const auto& [id, _] : rows) wf.students.push_back(id);
  const auto n = static_cast<Eigen::Index>(wf.students.size());
  const auto p = static_cast<Eigen::Index>(wf.columns.size());
  wf.weeks.assign(static_cast<std::size_t>(max_week), Matrix::Zero(n, p));
  Eigen::Index i = 0;
  for (const auto& [id, weeks] : rows) {
    for (const auto& [w, v] : weeks)
      for (Eigen::Index j = 0; j < p; ++j) wf.weeks[static_cast<std::size_t>(w - 1)](i, j) = v[static_cast<std::size_t>(j)];
    ++i;
  }
  return wf;
}

bool is_valid_grade(double grade) {
  static constexpr std::array<double, 12> kScale = {0.7, 1.0, 1.3, 1.7, 2.0, 2.3,
                                                    2.7, 3.0, 3.3, 3.7, 4.0, 5.0};
  return std::any_of(kScale.begin(), kScale.end(), [&](double g) { return std::abs(g - grade) < 1e-9; });
}

bool label_at_risk(double grade) {
  if (!is_valid_grade(grade)) throw DomainError("grade " + format_number(grade) + " is not on the 0.7-5.0 scale");
  return grade >= kAtRiskGrade - 1e-9;
}

LabeledCohort make_labeled_cohort(WeeklyFeatures features, const std::map<std::string, double>& grades) {
  LabeledCohort cohort;
  const auto n = static_cast<Eigen::Index>(features.students.size());
  cohort.labels.resize(n);
  cohort.grades.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = features.students[static_cast<std::size_t>(i)];
    auto it = grades.find(id);
    if (it == grades.end()) throw SchemaError("no grade for student '" + id + "'");
    cohort.grades(i) = it->second;
    cohort.labels(i) = label_at_risk(it->second) ? 1.0 : 0.0;
  }
  cohort.features = std::move(features);
  return cohort;
}

}  // namespace ew::features
