#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "earlywarn/transfer.hpp"

namespace ew::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure, or more than 10% of cells failed
inline constexpr int kExitUsage = 2;    // invalid spec, config or flags
inline constexpr int kExitParse = 3;    // unparseable input file

struct SimulateOptions {
  std::vector<std::filesystem::path> specs;  // one cohort, or two paired courses
  std::filesystem::path out;
};

struct FeaturizeOptions {
  std::filesystem::path events;
  std::filesystem::path config;
  std::filesystem::path grades;  // optional: fixes the student list
  std::filesystem::path out;
  bool replication_screening = false;
  features::Eng2Anchor eng2_anchor = features::Eng2Anchor::page;
};

struct RunOptions {
  std::filesystem::path reference;
  std::vector<std::filesystem::path> targets;
  std::filesystem::path out;
  transfer::ExperimentPlan plan;
  features::Eng2Anchor eng2_anchor = features::Eng2Anchor::page;
};

struct ReportOptions {
  std::filesystem::path run;
  std::filesystem::path out;  // defaults to <run>/figures
};

// Each returns a process exit code; errors are reported on stderr.
int cmd_simulate(const SimulateOptions& options);
int cmd_featurize(const FeaturizeOptions& options);
int cmd_run(const RunOptions& options);
int cmd_report(const ReportOptions& options);

// "1-12", "1,3,5" or a mix such as "1-4,8".
std::vector<int> parse_week_list(const std::string& text);

// Maps a library exception to an exit code and prints it.
int report_error(const std::exception& e);

}  // namespace ew::cli
