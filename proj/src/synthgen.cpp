#include "earlywarn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"
#include "earlywarn/learners.hpp"

namespace ew::synthgen {
namespace {

using trace::EventKind;
using trace::RawEvent;
using trace::TaskClass;

constexpr int kWeeks = 12;
constexpr std::uint64_t kLatentStream = 1, kBehaviorStream = 2, kNoiseStream = 3;

// Pass grades, best first, and at-risk grades, mildest first.
constexpr double kPassGrades[] = {0.7, 1.0, 1.3, 1.7, 2.0, 2.3, 2.7, 3.0, 3.3};
constexpr double kRiskGrades[] = {3.7, 4.0, 5.0};

double sigmoid(double x) { return learners::sigmoid(x); }

struct ClassBehavior {
  double participation;  // baseline log-odds of working on an assignment
  double correct_shift;
};

ClassBehavior behavior_of(TaskClass c) {
  switch (c) {
    case TaskClass::digital_incentivized: return {1.0, 0.5};
    case TaskClass::digital_nonincentivized: return {-0.3, 0.3};
    case TaskClass::paper: return {0.4, 0.0};
  }
  return {0.0, 0.0};
}

struct StudentTrace {
  std::vector<RawEvent> events;
  double sessions = 0;
  double lead_sum = 0;
  int lead_count = 0;
};

class StudentSimulator {
 public:
  StudentSimulator(const trace::CourseConfig& config, const CohortSpec& spec, std::string id, LatentStudent z,
                   std::uint64_t seed)
      : config_(config), spec_(spec), id_(std::move(id)), z_(z), rng_(seed) {}

  StudentTrace run() {
    for (const auto& a : config_.assignments) assignment(a);
    if (spec_.slide_forum_available) course_clicks();
    std::stable_sort(out_.events.begin(), out_.events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timestamp < b.timestamp; });
    return std::move(out_);
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  int poisson(double mean) { return std::poisson_distribution<int>(mean)(rng_); }

  void emit(Instant t, EventKind kind, const std::string& object, std::optional<TaskClass> cls,
            std::optional<bool> correct = std::nullopt, std::optional<double> points = std::nullopt) {
    out_.events.push_back({id_, t, kind, object, cls, correct, points});
  }

  // Uniform start in [earliest, latest], moved into daytime hours.
  Instant session_start(Instant earliest, Instant latest) {
    const double span = static_cast<double>((latest - earliest).count());
    Instant t = earliest + Seconds{static_cast<std::int64_t>(uniform(0.0, std::max(span, 1.0)))};
    // Pull night-time starts into the 08:00-20:00 band of the same day.
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const auto hour = std::chrono::duration_cast<std::chrono::hours>(t - day).count();
    if (hour < 8 || hour >= 20) t = day + std::chrono::hours(8) + Seconds{static_cast<std::int64_t>(uniform(0, 12 * 3600))};
    return std::clamp(t, earliest, latest);
  }

  void assignment(const trace::AssignmentSpec& a) {
    const auto cls = a.task_class;
    const auto b = behavior_of(cls);
    if (!bernoulli(sigmoid(b.participation + z_.c))) return;

    const double window_days = static_cast<double>((a.deadline - Instant{a.release_date}).count()) / 86400.0;
    // Lead time before the deadline grows with conscientiousness.
    const double lead_days =
        std::clamp(window_days * sigmoid(0.9 * z_.c + 0.7 * normal() - 0.3), 0.1, window_days - 0.05);
    const Instant first = a.deadline - Seconds{static_cast<std::int64_t>(lead_days * 86400.0)};
    const int n_sessions = 1 + poisson(std::exp(0.2 + 0.45 * z_.c) * window_days / 7.0);
    out_.sessions += n_sessions;
    out_.lead_sum += lead_days;
    out_.lead_count += 1;

    const double p_correct = sigmoid(z_.theta + b.correct_shift);
    const Instant last_start = std::max(first, a.deadline - std::chrono::hours(2));
    for (int s = 0; s < n_sessions; ++s) {
      Instant t = s == 0 ? first : session_start(first, last_start);
      work_session(a, t, p_correct);
    }
    // Occasional follow-up in the week after the deadline.
    if (bernoulli(0.15 * (1.0 - sigmoid(z_.c)))) {
      const Instant late = a.deadline + Seconds{static_cast<std::int64_t>(uniform(3600.0, 6.0 * 86400.0))};
      work_session(a, late, p_correct);
    }
  }

  void work_session(const trace::AssignmentSpec& a, Instant t, double p_correct) {
    const auto cls = a.task_class;
    const bool paper = cls == TaskClass::paper;
    const auto step = [&] { return Seconds{static_cast<std::int64_t>(uniform(60.0, 600.0))}; };
    const auto& page = a.pages[static_cast<std::size_t>(std::uniform_int_distribution<int>(
        0, static_cast<int>(a.pages.size()) - 1)(rng_))];
    emit(t, EventKind::page_view, page.page_id, cls);
    for (int k = 1; k <= page.task_count; ++k) {
      if (!bernoulli(0.85)) continue;
      const std::string task = page.page_id + "/" + std::to_string(k);
      t += step();
      emit(t, EventKind::page_view, task, cls);
      t += step();
      const bool ok = bernoulli(p_correct);
      std::optional<double> pts;
      if (paper && a.max_points) {
        const double per_task = *a.max_points / a.total_tasks();
        pts = ok ? per_task : std::floor(per_task * uniform(0.0, 0.6) * 2.0) / 2.0;
      }
      emit(t, EventKind::submission, task, cls, ok, pts);
      if (ok && bernoulli(0.3)) {
        t += step();
        emit(t, EventKind::page_view, task, cls);
      }
    }
  }

  void course_clicks() {
    for (int w = 0; w < config_.n_weeks; ++w) {
      const Instant week_start = config_.start() + kWeek * w;
      const int slides = poisson(std::exp(0.6 + 0.5 * z_.c));
      const int forum = poisson(std::exp(-0.4 + 0.3 * z_.c));
      for (int k = 0; k < slides; ++k)
        emit(session_start(week_start, week_start + kWeek - Seconds{1}), EventKind::slide_download,
             fmt::format("slides-{:02d}", w + 1), std::nullopt);
      for (int k = 0; k < forum; ++k)
        emit(session_start(week_start, week_start + kWeek - Seconds{1}), EventKind::forum_click,
             fmt::format("thread-{:02d}-{}", w + 1, k % 3), std::nullopt);
    }
  }

  const trace::CourseConfig& config_;
  const CohortSpec& spec_;
  std::string id_;
  LatentStudent z_;
  std::mt19937_64 rng_;
  StudentTrace out_;
};

Vector zscore(const Vector& v) {
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
  if (!(sd > 0)) return Vector::Zero(v.size());
  return (v.array() - mean) / sd;
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

void CohortSpec::validate() const {
  if (n_students < 2) throw SpecError("n_students must be at least 2");
  if (course_id.empty()) throw SpecError("course_id is empty");
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw SpecError("prevalence must lie in (0, 1)");
  const auto at_risk = std::lround(prevalence * n_students);
  if (at_risk < 1 || at_risk >= n_students)
    throw SpecError(fmt::format("prevalence {} leaves an empty class at n = {}", prevalence, n_students));
  if (!(noise_sd >= 0.0)) throw SpecError("noise_sd must be nonnegative");
  for (double b : {beta_engagement, beta_timing, theta_weight})
    if (!std::isfinite(b)) throw SpecError("effect sizes must be finite");
}

CohortSpec parse_cohort_spec(const nlohmann::json& j) {
  CohortSpec s;
  try {
    s.n_students = j.at("n_students").get<int>();
    const auto t = j.value("template", std::string("weekly"));
    if (t == "weekly")
      s.course_template = Template::weekly;
    else if (t == "biweekly")
      s.course_template = Template::biweekly;
    else
      throw SpecError("unknown template '" + t + "'");
    s.course_id = j.value("course_id", s.course_id);
    if (j.contains("start_date")) s.start_date = parse_date(j.at("start_date").get<std::string>());
    s.prevalence = j.at("prevalence").get<double>();
    s.beta_engagement = j.value("beta_engagement", s.beta_engagement);
    s.beta_timing = j.value("beta_timing", s.beta_timing);
    s.theta_weight = j.value("theta_weight", s.theta_weight);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.slide_forum_available = j.value("slide_forum_available", s.slide_forum_available);
    const auto policy = j.value("incentive_policy", std::string("bonus_points"));
    if (policy == "bonus_points")
      s.incentive_policy = trace::IncentivePolicy::bonus_points;
    else if (policy == "exam_admission")
      s.incentive_policy = trace::IncentivePolicy::exam_admission;
    else
      throw SpecError("unknown incentive_policy '" + policy + "'");
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("bad cohort spec: ") + e.what());
  } catch (const ParseError& e) {
    throw SpecError(std::string("bad cohort spec: ") + e.what());
  } catch (const DomainError& e) {
    throw SpecError(std::string("bad cohort spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json cohort_spec_to_json(const CohortSpec& s) {
  return {{"n_students", s.n_students},
          {"template", s.course_template == Template::weekly ? "weekly" : "biweekly"},
          {"course_id", s.course_id},
          {"start_date", format_date(s.start_date)},
          {"prevalence", s.prevalence},
          {"beta_engagement", s.beta_engagement},
          {"beta_timing", s.beta_timing},
          {"theta_weight", s.theta_weight},
          {"noise_sd", s.noise_sd},
          {"slide_forum_available", s.slide_forum_available},
          {"incentive_policy", trace::to_string(s.incentive_policy)},
          {"seed", s.seed}};
}

trace::CourseConfig course_template(const CohortSpec& spec) {
  trace::CourseConfig c;
  c.course_id = spec.course_id;
  c.start_date = spec.start_date;
  c.n_weeks = kWeeks;
  c.incentive_policy = spec.incentive_policy;
  c.slide_forum_available = spec.slide_forum_available;
  const int period = spec.course_template == Template::weekly ? 1 : 2;
  for (int w = 1; w <= kWeeks; w += period) {
    const Date release = spec.start_date + std::chrono::days(7 * (w - 1));
    const Instant deadline = Instant{release} + kWeek * period - Seconds{1};
    const auto add = [&](TaskClass cls, const char* tag, int pages, int tasks, std::optional<double> max_points) {
      trace::AssignmentSpec a;
      a.assignment_id = fmt::format("{}{:02d}", tag, w);
      a.task_class = cls;
      a.release_date = release;
      a.deadline = deadline;
      for (int p = 1; p <= pages; ++p) a.pages.push_back({fmt::format("{}{:02d}-p{}", tag, w, p), tasks});
      a.max_points = max_points;
      c.assignments.push_back(std::move(a));
    };
    add(TaskClass::digital_incentivized, "I", 2, 3, std::nullopt);
    add(TaskClass::digital_nonincentivized, "NI", 2, 2, std::nullopt);
    add(TaskClass::paper, "P", 1, 4, 10.0);
  }
  c.validate();
  return c;
}

Cohort generate_cohort(const CohortSpec& spec) {
  spec.validate();
  Cohort cohort;
  cohort.spec = spec;
  cohort.config = course_template(spec);
  const auto n = static_cast<std::size_t>(spec.n_students);
  std::vector<StudentTrace> traces(n);
  const auto m = static_cast<Eigen::Index>(n);
  Vector sessions(m), lead(m), noise(m), theta(m);
  for (std::size_t i = 0; i < n; ++i) {
    cohort.students.push_back(fmt::format("s{:04d}", i + 1));
    std::mt19937_64 latent_rng(derive_seed(spec.seed, kLatentStream, i));
    std::normal_distribution<double> std_normal(0.0, 1.0);
    LatentStudent z;
    z.theta = std_normal(latent_rng);
    z.c = std_normal(latent_rng);
    cohort.latents.push_back(z);
    theta(static_cast<Eigen::Index>(i)) = z.theta;
    StudentSimulator sim(cohort.config, spec, cohort.students.back(), z,
                         derive_seed(spec.seed, kBehaviorStream, i));
    traces[i] = sim.run();
    const auto k = static_cast<Eigen::Index>(i);
    sessions(k) = traces[i].sessions;
    lead(k) = traces[i].lead_count ? traces[i].lead_sum / traces[i].lead_count : 0.0;
    std::mt19937_64 noise_rng(derive_seed(spec.seed, kNoiseStream, i));
    noise(k) = std_normal(noise_rng);
  }
  for (auto& t : traces)
    for (auto& e : t.events) cohort.events.push_back(std::move(e));

  // Exam score from realized behavior; the lowest scores form the at-risk group.
  const Vector score = spec.beta_engagement * zscore(sessions) + spec.beta_timing * zscore(lead) +
                       spec.theta_weight * theta + spec.noise_sd * noise;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score(static_cast<Eigen::Index>(a)) < score(static_cast<Eigen::Index>(b));
  });
  const auto n_risk = static_cast<std::size_t>(std::lround(spec.prevalence * spec.n_students));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& id = cohort.students[order[r]];
    if (r < n_risk) {
      // Lowest scores receive the worst grade.
      const std::size_t band = r * 3 / n_risk;
      cohort.grades[id] = kRiskGrades[2 - band];
    } else {
      const std::size_t band = (r - n_risk) * 9 / (n - n_risk);
      cohort.grades[id] = kPassGrades[8 - band];
    }
  }
  return cohort;
}

std::pair<Cohort, Cohort> generate_paired_courses(const CohortSpec& a, const CohortSpec& b) {
  if (a.course_id == b.course_id) throw SpecError("paired courses need distinct course ids");
  if (sign(a.beta_engagement) != sign(b.beta_engagement) || sign(a.beta_timing) != sign(b.beta_timing) ||
      sign(a.theta_weight) != sign(b.theta_weight))
    throw SpecError("paired courses must share effect directions");
  return {generate_cohort(a), generate_cohort(b)};
}

}  // namespace ew::synthgen
