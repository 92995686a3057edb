#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "earlywarn/errors.hpp"

namespace {

using namespace ew;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, const std::vector<T>& all, Parse parse, const char* what) {
  if (text == "all" || text == "both") return all;
  std::vector<T> out;
  for (const auto& item : split(text)) {
    const auto v = parse(item);
    if (!v) throw ParameterError(std::string("unknown ") + what + " '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ParameterError(std::string("empty ") + what + " list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early-warning models from learning-event logs"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort (two specs: paired courses)");
  simulate->add_option("--spec", sim.specs, "Cohort spec JSON (repeat for a pair)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();

  cli::FeaturizeOptions feat;
  auto* featurize = app.add_subcommand("featurize", "Weekly features and aggregated matrices");
  featurize->add_option("--events", feat.events, "Event log CSV")->required();
  featurize->add_option("--config", feat.config, "Course config JSON")->required();
  featurize->add_option("--grades", feat.grades, "Grade file; fixes the student list");
  featurize->add_option("--out", feat.out, "Output directory")->required();
  featurize->add_flag("--replication-screening", feat.replication_screening, "Also emit the duplicated per1 column");
  const std::map<std::string, features::Eng2Anchor> anchors = {{"page", features::Eng2Anchor::page},
                                                                {"task", features::Eng2Anchor::task}};
  featurize->add_option("--eng2-anchor", feat.eng2_anchor, "Lead time from first touch per page or per task")
      ->transform(CLI::CheckedTransformer(anchors));

  cli::RunOptions run;
  std::string weeks = "all", learner_list = "EN,RF,GBT", strategy_list = "both", policy_list = "both",
              preset = "small";
  auto* run_cmd = app.add_subcommand("run", "Weekly in-sample and transfer experiment");
  run_cmd->add_option("--reference", run.reference, "Reference course directory")->required();
  run_cmd->add_option("--target", run.targets, "Target course directory (repeatable)");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--seed", run.plan.seed, "Run seed");
  run_cmd->add_option("--weeks", weeks, "Weeks, e.g. 1-12 or 1,4,8 (default all)");
  run_cmd->add_option("--learners", learner_list, "Comma list of EN, RF, GBT");
  run_cmd->add_option("--strategy", strategy_list, "progressive, early_reset or both");
  run_cmd->add_option("--policy", policy_list, "youden_source, prevalence_target or both");
  run_cmd->add_option("--grid-preset", preset, "paper or small")->check(CLI::IsMember({"paper", "small"}));
  run_cmd->add_flag("--replication-screening", run.plan.replication_screening, "Force the six replication exclusions");
  run_cmd->add_option("--folds", run.plan.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  run_cmd->add_option("--jobs", run.plan.jobs, "Worker threads")->check(CLI::Range(1, 1024));
  run_cmd->add_option("--eng2-anchor", run.eng2_anchor, "Lead time from first touch per page or per task")
      ->transform(CLI::CheckedTransformer(anchors));

  cli::ReportOptions rep;
  auto* report = app.add_subcommand("report", "SVG charts of a run directory");
  report->add_option("--run", rep.run, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", rep.out, "Chart directory (default <run>/figures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (simulate->parsed()) return cli::cmd_simulate(sim);
    if (featurize->parsed()) return cli::cmd_featurize(feat);
    if (run_cmd->parsed()) {
      if (weeks != "all") run.plan.weeks = cli::parse_week_list(weeks);
      run.plan.learners = parse_list<learners::LearnerKind>(
          learner_list, {learners::LearnerKind::elastic_net, learners::LearnerKind::forest, learners::LearnerKind::boost},
          learners::learner_from_string, "learner");
      run.plan.strategies = parse_list<aggregate::Strategy>(
          strategy_list, {aggregate::Strategy::progressive, aggregate::Strategy::early_reset},
          aggregate::strategy_from_string, "strategy");
      run.plan.policies = parse_list<tuneval::ThresholdPolicy>(
          policy_list, {tuneval::ThresholdPolicy::youden_source, tuneval::ThresholdPolicy::prevalence_target},
          tuneval::policy_from_string, "policy");
      run.plan.preset = *learners::preset_from_string(preset);
      return cli::cmd_run(run);
    }
    if (report->parsed()) return cli::cmd_report(rep);
  } catch (const std::exception& e) {
    return cli::report_error(e);
  }
  return cli::kExitUsage;
}
