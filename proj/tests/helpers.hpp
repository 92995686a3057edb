#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "earlywarn/trace.hpp"
#include "earlywarn/types.hpp"

namespace testing {

using namespace ew;

inline Instant at(const std::string& s) { return parse_instant(s); }

// A 12-week course starting Monday 2024-10-14 with one assignment per class
// due at the end of week 2.
inline trace::CourseConfig tiny_course() {
  trace::CourseConfig c;
  c.course_id = "tiny";
  c.start_date = parse_date("2024-10-14");
  c.n_weeks = 12;
  const Instant deadline = at("2024-10-27T23:59:59Z");
  c.assignments.push_back({"I02", trace::TaskClass::digital_incentivized, parse_date("2024-10-21"), deadline,
                           {{"I02-p1", 3}, {"I02-p2", 2}}, std::nullopt});
  c.assignments.push_back({"NI02", trace::TaskClass::digital_nonincentivized, parse_date("2024-10-21"), deadline,
                           {{"NI02-p1", 2}}, std::nullopt});
  c.assignments.push_back({"P02", trace::TaskClass::paper, parse_date("2024-10-21"), deadline,
                           {{"P02-p1", 4}}, 8.0});
  c.validate();
  return c;
}

inline trace::RawEvent event(const std::string& student, const std::string& when, trace::EventKind kind,
                             const std::string& object, std::optional<trace::TaskClass> cls = std::nullopt,
                             std::optional<bool> correct = std::nullopt,
                             std::optional<double> points = std::nullopt) {
  return {student, at(when), kind, object, cls, correct, points};
}

inline trace::RawEvent submit(const std::string& student, const std::string& when, const std::string& task,
                              trace::TaskClass cls, bool correct, std::optional<double> points = std::nullopt) {
  return event(student, when, trace::EventKind::submission, task, cls, correct, points);
}

inline trace::RawEvent view(const std::string& student, const std::string& when, const std::string& object,
                            trace::TaskClass cls) {
  return event(student, when, trace::EventKind::page_view, object, cls);
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector to_vector(const std::vector<int>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// Random labels with both classes present.
inline std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, double rate = 0.5) {
  std::bernoulli_distribution b(rate);
  std::vector<int> y(n);
  do {
    for (auto& v : y) v = b(rng) ? 1 : 0;
  } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0);
  return y;
}

}  // namespace testing
