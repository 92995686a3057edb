#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"
#include "earlywarn/synthgen.hpp"
#include "report.hpp"

namespace ew::cli {
namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Write>
std::string render(Write&& write) {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

nlohmann::json base_manifest(const std::string& command) {
  return {{"tool", "earlywarn"}, {"version", "0.1.0"}, {"command", command}};
}

std::string file_hash(const std::string& content) { return fmt::format("{:016x}", fnv1a64(content)); }

void write_cohort(const fs::path& dir, const synthgen::Cohort& cohort) {
  fs::create_directories(dir);
  const auto spec = synthgen::cohort_spec_to_json(cohort.spec);
  const auto config = trace::course_config_to_json(cohort.config);
  const auto events = render([&](std::ostream& o) { trace::write_event_log(o, cohort.events); });
  const auto grades = render([&](std::ostream& o) { trace::write_grades(o, cohort.grades); });
  std::string latents = "student_id,theta,c\n";
  for (std::size_t i = 0; i < cohort.students.size(); ++i)
    latents += fmt::format("{},{},{}\n", cohort.students[i], format_number(cohort.latents[i].theta),
                           format_number(cohort.latents[i].c));

  auto manifest = base_manifest("simulate");
  manifest["seed"] = cohort.spec.seed;
  manifest["spec"] = spec;
  manifest["spec_hash"] = file_hash(spec.dump());
  manifest["files"] = {{"course.json", file_hash(config)},
                       {"events.csv", file_hash(events)},
                       {"grades.csv", file_hash(grades)},
                       {"latents.csv", file_hash(latents)}};
  transfer::write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
  transfer::write_atomically(dir / "spec.json", spec.dump(2) + "\n");
  transfer::write_atomically(dir / "course.json", config);
  transfer::write_atomically(dir / "events.csv", events);
  transfer::write_atomically(dir / "grades.csv", grades);
  transfer::write_atomically(dir / "latents.csv", latents);
}

synthgen::CohortSpec load_spec(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return synthgen::parse_cohort_spec(j);
}

}  // namespace

int report_error(const std::exception& e) {
  std::cerr << "earlywarn: " << e.what() << "\n";
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const SpecError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ParameterError*>(&e))
    return kExitUsage;
  return kExitFailure;
}

std::vector<int> parse_week_list(const std::string& text) {
  std::vector<int> weeks;
  std::stringstream ss(text);
  std::string part;
  const auto number = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || v < 1) throw ParameterError("bad week list '" + text + "'");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      weeks.push_back(number(part));
    } else {
      const int lo = number(part.substr(0, dash)), hi = number(part.substr(dash + 1));
      if (lo > hi) throw ParameterError("bad week range '" + part + "'");
      for (int w = lo; w <= hi; ++w) weeks.push_back(w);
    }
  }
  if (weeks.empty()) throw ParameterError("empty week list");
  std::sort(weeks.begin(), weeks.end());
  weeks.erase(std::unique(weeks.begin(), weeks.end()), weeks.end());
  return weeks;
}

int cmd_simulate(const SimulateOptions& options) {
  if (options.specs.empty() || options.specs.size() > 2) throw ParameterError("simulate takes one or two --spec files");
  if (options.specs.size() == 1) {
    write_cohort(options.out, synthgen::generate_cohort(load_spec(options.specs.front())));
  } else {
    const auto [a, b] = synthgen::generate_paired_courses(load_spec(options.specs[0]), load_spec(options.specs[1]));
    write_cohort(options.out / a.spec.course_id, a);
    write_cohort(options.out / b.spec.course_id, b);
  }
  return kExitOk;
}

int cmd_featurize(const FeaturizeOptions& options) {
  const auto config_text = read_text(options.config);
  const auto config = trace::parse_course_config(config_text);
  const auto events_text = read_text(options.events);
  std::istringstream events_in(events_text);
  const auto events = trace::parse_event_log(events_in, config);
  std::vector<std::string> students;
  std::string grades_text;
  if (!options.grades.empty()) {
    grades_text = read_text(options.grades);
    std::istringstream in(grades_text);
    for (const auto& [id, g] : trace::parse_grades(in)) students.push_back(id);
  }
  if (events.empty()) std::cerr << "earlywarn: warning: no events; all features are zero\n";

  features::ExtractOptions extract;
  extract.emit_per1_duplicate = options.replication_screening;
  extract.eng2_anchor = options.eng2_anchor;
  const auto weekly = features::extract_weekly_features(events, config, students, extract);

  fs::create_directories(options.out);
  auto manifest = base_manifest("featurize");
  manifest["inputs"] = {{"config", file_hash(config_text)}, {"events", file_hash(events_text)},
                        {"grades", file_hash(grades_text)}};
  manifest["replication_screening"] = options.replication_screening;
  manifest["eng2_anchor"] = options.eng2_anchor == features::Eng2Anchor::page ? "page" : "task";
  manifest["n_students"] = weekly.students.size();
  manifest["n_weeks"] = weekly.n_weeks();
  transfer::write_atomically(options.out / "manifest.json", manifest.dump(2) + "\n");
  transfer::write_atomically(options.out / "weekly_features.csv",
                             render([&](std::ostream& o) { features::write_weekly_csv(o, weekly); }));
  for (auto strategy : {aggregate::Strategy::progressive, aggregate::Strategy::early_reset}) {
    const auto dir = options.out / aggregate::to_string(strategy);
    fs::create_directories(dir);
    for (int k = 1; k <= weekly.n_weeks(); ++k) {
      const auto m = aggregate::aggregate(weekly, strategy, k);
      transfer::write_atomically(dir / fmt::format("week_{:02d}.csv", k),
                                 render([&](std::ostream& o) { write_frame_csv(o, m.frame); }));
    }
  }
  return kExitOk;
}

int cmd_run(const RunOptions& options) {
  features::ExtractOptions extract;
  extract.emit_per1_duplicate = options.plan.replication_screening;
  extract.eng2_anchor = options.eng2_anchor;
  const auto reference = transfer::load_course(options.reference, extract);
  std::vector<transfer::CourseData> targets;
  for (const auto& t : options.targets) targets.push_back(transfer::load_course(t, extract));

  fs::create_directories(options.out);
  transfer::write_atomically(options.out / "manifest.json",
                             transfer::make_manifest(reference, targets, options.plan).dump(2) + "\n");
  const auto result = transfer::run_experiment(reference, targets, options.plan);
  transfer::write_results(options.out, result);
  for (const auto& f : result.failures)
    std::cerr << fmt::format("earlywarn: cell {}->{} week {} {} {} failed: {}\n", f.reference, f.target, f.week,
                             learners::to_string(f.learner), aggregate::to_string(f.strategy), f.message);
  if (result.failure_fraction() > 0.10) {
    std::cerr << fmt::format("earlywarn: {} of {} cells failed\n", result.failures.size(), result.attempted);
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_report(const ReportOptions& options) {
  const auto out = options.out.empty() ? options.run / "figures" : options.out;
  render_run_report(options.run, out);
  return kExitOk;
}

}  // namespace ew::cli
