#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ew::cli {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal SVG line chart; axes span the data (or the given bounds).
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, double y_min, double y_max, bool diagonal = false);

// Metric trajectories per (target, policy) and one chart per calibration file.
void render_run_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

}  // namespace ew::cli
