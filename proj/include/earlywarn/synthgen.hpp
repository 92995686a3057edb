#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "earlywarn/trace.hpp"

namespace ew::synthgen {

enum class Template { weekly, biweekly };

struct CohortSpec {
  int n_students = 500;
  Template course_template = Template::weekly;
  std::string course_id = "synthetic";
  Date start_date = parse_date("2024-10-14");
  double prevalence = 0.5;
  double beta_engagement = 1.0;
  double beta_timing = 1.0;
  double theta_weight = 1.0;  // weight of latent ability in the exam score
  double noise_sd = 0.5;
  bool slide_forum_available = true;
  trace::IncentivePolicy incentive_policy = trace::IncentivePolicy::bonus_points;
  std::uint64_t seed = 1;

  // Throws SpecError.
  void validate() const;
};

CohortSpec parse_cohort_spec(const nlohmann::json& j);
nlohmann::json cohort_spec_to_json(const CohortSpec& spec);

struct LatentStudent {
  double theta = 0.0;  // ability
  double c = 0.0;      // conscientiousness
};

struct Cohort {
  CohortSpec spec;
  trace::CourseConfig config;
  std::vector<std::string> students;
  std::vector<LatentStudent> latents;  // aligned with students
  std::vector<trace::RawEvent> events;  // sorted by (student, timestamp)
  std::map<std::string, double> grades;
};

// Twelve-week course: I, NI and P assignments released every week (weekly) or
// every other week (biweekly) with a deadline one second before the window closes.
trace::CourseConfig course_template(const CohortSpec& spec);

Cohort generate_cohort(const CohortSpec& spec);

// Two cohorts sharing the latent-to-behavior mapping. The effect directions
// (signs of the betas and theta_weight) must agree and course ids must differ.
std::pair<Cohort, Cohort> generate_paired_courses(const CohortSpec& a, const CohortSpec& b);

}  // namespace ew::synthgen
