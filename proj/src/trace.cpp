#include "earlywarn/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "earlywarn/errors.hpp"

namespace ew::trace {

using nlohmann::json;

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::submission: return "submission";
    case EventKind::page_view: return "page_view";
    case EventKind::slide_download: return "slide_download";
    case EventKind::forum_click: return "forum_click";
  }
  return {};
}

std::string to_string(TaskClass c) {
  switch (c) {
    case TaskClass::digital_incentivized: return "digital_incentivized";
    case TaskClass::digital_nonincentivized: return "digital_nonincentivized";
    case TaskClass::paper: return "paper";
  }
  return {};
}

std::string to_string(IncentivePolicy p) {
  return p == IncentivePolicy::bonus_points ? "bonus_points" : "exam_admission";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  if (s == "submission") return EventKind::submission;
  if (s == "page_view") return EventKind::page_view;
  if (s == "slide_download") return EventKind::slide_download;
  if (s == "forum_click") return EventKind::forum_click;
  return std::nullopt;
}

std::optional<TaskClass> task_class_from_string(std::string_view s) {
  if (s == "digital_incentivized") return TaskClass::digital_incentivized;
  if (s == "digital_nonincentivized") return TaskClass::digital_nonincentivized;
  if (s == "paper") return TaskClass::paper;
  return std::nullopt;
}

int AssignmentSpec::total_tasks() const {
  int n = 0;
  for (const auto& p : pages) n += p.task_count;
  return n;
}

void CourseConfig::validate() const {
  if (course_id.empty()) throw ConfigError("course_id is empty");
  if (n_weeks <= 0) throw ConfigError("n_weeks must be positive");
  std::set<std::string> ids, objects;
  for (const auto& a : assignments) {
    if (!ids.insert(a.assignment_id).second)
      throw ConfigError("duplicate assignment id '" + a.assignment_id + "'");
    if (a.pages.empty()) throw ConfigError("assignment '" + a.assignment_id + "' has no pages");
    for (const auto& p : a.pages) {
      if (p.task_count <= 0)
        throw ConfigError("page '" + p.page_id + "' must have a positive task count");
      if (!objects.insert(p.page_id).second)
        throw ConfigError("page id '" + p.page_id + "' used twice");
    }
    if (a.deadline <= start() || a.deadline >= end())
      throw ConfigError("deadline of '" + a.assignment_id + "' lies outside the course span");
    const Instant release{a.release_date};
    if (release >= a.deadline)
      throw ConfigError("release of '" + a.assignment_id + "' is not before its deadline");
    if (a.task_class != TaskClass::digital_nonincentivized) {
      // Incentivized windows close within the last day of a one- or two-week cycle.
      const auto span = a.deadline - release;
      const bool weekly = span > 6 * kDay && span <= 7 * kDay;
      const bool biweekly = span > 13 * kDay && span <= 14 * kDay;
      if (!weekly && !biweekly)
        throw ConfigError("incentivized assignment '" + a.assignment_id +
                          "' must have a 7 or 14 day completion window");
    }
    if (a.max_points && *a.max_points < 0)
      throw ConfigError("max_points of '" + a.assignment_id + "' is negative");
  }
}

namespace {

TaskClass task_class_field(const json& j, const std::string& key) {
  const auto s = j.at(key).get<std::string>();
  auto c = task_class_from_string(s);
  if (!c) throw ConfigError("unknown task_class '" + s + "'");
  return *c;
}

}  // namespace

CourseConfig parse_course_config(const std::string& json_text) {
  CourseConfig c;
  try {
    const json j = json::parse(json_text);
    c.course_id = j.at("course_id").get<std::string>();
    c.start_date = parse_date(j.at("start_date").get<std::string>());
    c.n_weeks = j.at("n_weeks").get<int>();
    const auto policy = j.at("incentive_policy").get<std::string>();
    if (policy == "bonus_points")
      c.incentive_policy = IncentivePolicy::bonus_points;
    else if (policy == "exam_admission")
      c.incentive_policy = IncentivePolicy::exam_admission;
    else
      throw ConfigError("unknown incentive_policy '" + policy + "'");
    c.slide_forum_available = j.at("slide_forum_available").get<bool>();
    for (const auto& ja : j.at("assignments")) {
      AssignmentSpec a;
      a.assignment_id = ja.at("assignment_id").get<std::string>();
      a.task_class = task_class_field(ja, "task_class");
      a.release_date = parse_date(ja.at("release_date").get<std::string>());
      a.deadline = parse_instant(ja.at("deadline").get<std::string>());
      for (const auto& jp : ja.at("pages"))
        a.pages.push_back({jp.at("page_id").get<std::string>(), jp.at("tasks").get<int>()});
      if (ja.contains("max_points") && !ja.at("max_points").is_null())
        a.max_points = ja.at("max_points").get<double>();
      c.assignments.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("course config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("course config: ") + e.what());
  }
  c.validate();
  return c;
}

CourseConfig load_course_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open course config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_course_config(ss.str());
}

std::string course_config_to_json(const CourseConfig& c) {
  json j;
  j["course_id"] = c.course_id;
  j["start_date"] = format_date(c.start_date);
  j["n_weeks"] = c.n_weeks;
  j["incentive_policy"] = to_string(c.incentive_policy);
  j["slide_forum_available"] = c.slide_forum_available;
  json list = json::array();
  for (const auto& a : c.assignments) {
    json ja;
    ja["assignment_id"] = a.assignment_id;
    ja["task_class"] = to_string(a.task_class);
    ja["release_date"] = format_date(a.release_date);
    ja["deadline"] = format_instant(a.deadline);
    json pages = json::array();
    for (const auto& p : a.pages) pages.push_back({{"page_id", p.page_id}, {"tasks", p.task_count}});
    ja["pages"] = std::move(pages);
    ja["max_points"] = a.max_points ? json(*a.max_points) : json(nullptr);
    list.push_back(std::move(ja));
  }
  j["assignments"] = std::move(list);
  return j.dump(2) + "\n";
}

ObjectIndex::ObjectIndex(const CourseConfig& config) {
  for (std::size_t a = 0; a < config.assignments.size(); ++a) {
    const auto& spec = config.assignments[a];
    for (std::size_t p = 0; p < spec.pages.size(); ++p) {
      const auto& page = spec.pages[p];
      refs_[page.page_id] = {a, p, -1};
      for (int k = 1; k <= page.task_count; ++k)
        refs_[page.page_id + "/" + std::to_string(k)] = {a, p, k - 1};
    }
  }
}

const ObjectRef* ObjectIndex::find(const std::string& object_id) const {
  auto it = refs_.find(object_id);
  return it == refs_.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(',', begin);
    out.push_back(line.substr(begin, pos - begin));
    if (pos == std::string::npos) break;
    begin = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

std::vector<RawEvent> parse_event_log(std::istream& in, const CourseConfig& config) {
  using Kind = ParseError::Kind;
  std::vector<RawEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (lineno == 1 && line == kEventLogHeader) continue;
    const auto f = split_fields(line);
    if (f.size() != 7)
      throw ParseError(lineno, fmt::format("expected 7 fields, found {}", f.size()));
    RawEvent e;
    e.student_id = f[0];
    if (e.student_id.empty()) throw ParseError(lineno, "empty student_id");
    try {
      e.timestamp = parse_instant(f[1]);
    } catch (const DomainError& err) {
      throw ParseError(lineno, err.what());
    }
    if (e.timestamp < config.earliest_event() || e.timestamp > config.latest_event())
      throw ParseError(lineno, "timestamp " + f[1] + " outside the accepted course span",
                       Kind::range);
    auto kind = event_kind_from_string(f[2]);
    if (!kind) throw ParseError(lineno, "unknown event kind '" + f[2] + "'", Kind::enumeration);
    e.kind = *kind;
    e.object_id = f[3];
    if (e.object_id.empty()) throw ParseError(lineno, "empty object_id");
    if (!f[4].empty()) {
      auto c = task_class_from_string(f[4]);
      if (!c) throw ParseError(lineno, "unknown task_class '" + f[4] + "'", Kind::enumeration);
      e.task_class = *c;
    }
    const bool task_event = e.kind == EventKind::submission || e.kind == EventKind::page_view;
    if (task_event && !e.task_class)
      throw ParseError(lineno, f[2] + " event requires a task_class");
    if (!task_event && e.task_class)
      throw ParseError(lineno, f[2] + " event must not carry a task_class");
    if (!f[5].empty()) {
      if (e.kind != EventKind::submission)
        throw ParseError(lineno, "correct is only allowed on submissions");
      if (f[5] == "true")
        e.correct = true;
      else if (f[5] == "false")
        e.correct = false;
      else
        throw ParseError(lineno, "correct must be true or false", Kind::enumeration);
    }
    if (!f[6].empty()) {
      if (e.task_class != TaskClass::paper)
        throw ParseError(lineno, "points are only allowed on paper tasks");
      double pts = 0;
      if (!parse_double(f[6], pts) || !(pts >= 0) || !std::isfinite(pts))
        throw ParseError(lineno, "points must be a nonnegative number");
      e.points = pts;
    }
    events.push_back(std::move(e));
  }
  std::stable_sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
    if (a.student_id != b.student_id) return a.student_id < b.student_id;
    return a.timestamp < b.timestamp;
  });
  return events;
}

std::vector<RawEvent> parse_event_log(const std::filesystem::path& path,
                                      const CourseConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event log " + path.string());
  return parse_event_log(in, config);
}

void write_event_log(std::ostream& out, std::span<const RawEvent> events) {
  out << kEventLogHeader << '\n';
  for (const auto& e : events) {
    out << e.student_id << ',' << format_instant(e.timestamp) << ',' << to_string(e.kind) << ','
        << e.object_id << ',' << (e.task_class ? to_string(*e.task_class) : "") << ','
        << (e.correct ? (*e.correct ? "true" : "false") : "") << ','
        << (e.points ? fmt::format("{}", *e.points) : "") << '\n';
  }
}

std::vector<Session> sessionize(std::span<const RawEvent> events) {
  std::vector<Session> sessions;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (sessions.empty() || e.timestamp - sessions.back().end > kSessionGap) {
      sessions.push_back({e.student_id, {}, e.timestamp, e.timestamp});
    }
    auto& s = sessions.back();
    s.events.push_back(e);
    s.end = e.timestamp;
  }
  return sessions;
}

int assign_week(Instant t, const CourseConfig& config) {
  if (t < config.start() || t >= config.end())
    throw RangeError("instant " + format_instant(t) + " outside course " + config.course_id);
  return static_cast<int>((t - config.start()) / kWeek) + 1;
}

std::optional<DeadlineWindow> window_of(const RawEvent& event, const AssignmentSpec& spec) {
  const bool member = std::any_of(spec.pages.begin(), spec.pages.end(), [&](const PageSpec& p) {
    if (event.object_id == p.page_id) return true;
    const auto& id = event.object_id;
    if (id.size() <= p.page_id.size() + 1 || id.compare(0, p.page_id.size(), p.page_id) != 0 ||
        id[p.page_id.size()] != '/')
      return false;
    int k = 0;
    const char* first = id.data() + p.page_id.size() + 1;
    auto [ptr, ec] = std::from_chars(first, id.data() + id.size(), k);
    return ec == std::errc{} && ptr == id.data() + id.size() && k >= 1 && k <= p.task_count;
  });
  if (!member)
    throw LookupError("object '" + event.object_id + "' is not part of assignment '" +
                      spec.assignment_id + "'");
  if (event.timestamp <= spec.deadline) return DeadlineWindow::before_deadline;
  if (event.timestamp <= spec.deadline + kWeek) return DeadlineWindow::week_after_deadline;
  return std::nullopt;
}

std::map<std::string, double> parse_grades(std::istream& in) {
  std::map<std::string, double> grades;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || (lineno == 1 && line == "student_id,grade")) continue;
    const auto f = split_fields(line);
    double g = 0;
    if (f.size() != 2 || f[0].empty() || !parse_double(f[1], g))
      throw ParseError(lineno, "expected student_id,grade");
    if (!grades.emplace(f[0], g).second)
      throw ParseError(lineno, "duplicate grade for '" + f[0] + "'");
  }
  return grades;
}

std::map<std::string, double> load_grades(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grade file " + path.string());
  return parse_grades(in);
}

void write_grades(std::ostream& out, const std::map<std::string, double>& grades) {
  out << "student_id,grade\n";
  for (const auto& [id, g] : grades) out << id << ',' << fmt::format("{:.1f}", g) << '\n';
}

}  // namespace ew::trace
