#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"
#include "earlywarn/frame.hpp"
#include "earlywarn/transfer.hpp"

namespace ew::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 170, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d",
                                    "#666666"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

// Rows keyed by header name.
std::vector<std::map<std::string, std::string>> read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t j = 0; j < header.size() && j < cells.size(); ++j) row[header[j]] = cells[j];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, double y_min, double y_max, bool diagonal) {
  double x_min = 1e300, x_max = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  if (diagonal) {
    x_min = std::min(x_min, 0.0);
    x_max = std::max(x_max, 1.0);
  }
  if (!(x_max > x_min)) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  const auto sy = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n", kLeft, escape(title));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", kLeft,
                     kTop, pw, ph);
  for (int t = 0; t <= 4; ++t) {
    const double y = y_min + (y_max - y_min) * t / 4.0;
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 6, sy(y) + 4, y);
    const double x = x_min + (x_max - x_min) * t / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", sx(x),
                       kTop + ph + 18, x);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 10, escape(x_label));
  svg += fmt::format("<text x=\"14\" y=\"{:.1f}\" transform=\"rotate(-90 14 {:.1f})\" text-anchor=\"middle\">{}</text>\n",
                     kTop + ph / 2, kTop + ph / 2, escape(y_label));
  if (diagonal)
    svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#aaa\" "
                       "stroke-dasharray=\"4 3\"/>\n",
                       sx(0), sy(0), sx(1), sy(1));
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto* color = kPalette[k % std::size(kPalette)];
    std::string path;
    for (const auto& [x, y] : series[k].points) {
      if (!std::isfinite(y)) continue;
      path += fmt::format("{}{:.1f},{:.1f}", path.empty() ? "" : " ", sx(x), sy(std::clamp(y, y_min, y_max)));
      svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"{}\"/>\n", sx(x),
                         sy(std::clamp(y, y_min, y_max)), color);
    }
    if (!path.empty())
      svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", path, color);
    const double ly = kTop + 14 + 16 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       kWidth - kRight + 12, ly - 4, kWidth - kRight + 30, ly - 4, color);
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\">{}</text>\n", kWidth - kRight + 34, ly, escape(series[k].label));
  }
  return svg + "</svg>\n";
}

void render_run_report(const fs::path& run_dir, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto rows = read_table(run_dir / "results.csv");
  // (target, policy) -> (learner strategy) -> points, one chart per metric.
  for (const char* metric : {"auc", "kappa", "f1"}) {
    std::map<std::pair<std::string, std::string>, std::map<std::string, Series>> charts;
    for (const auto& r : rows) {
      auto& s = charts[{r.at("reference") + "->" + r.at("target"), r.at("policy")}][r.at("learner") + " " +
                                                                                   r.at("strategy")];
      s.label = r.at("learner") + " " + r.at("strategy");
      s.points.emplace_back(parse_number(r.at("week")), parse_number(r.at(metric)));
    }
    for (const auto& [key, by_series] : charts) {
      std::vector<Series> series;
      for (const auto& [name, s] : by_series) series.push_back(s);
      const double lo = std::string(metric) == "kappa" ? -1.0 : 0.0;
      transfer::write_atomically(
          out_dir / fmt::format("{}__{}__{}.svg", metric, safe_name(key.first), key.second),
          line_chart_svg(fmt::format("{} {} ({})", metric, key.first, key.second), "prediction week", metric,
                         series, lo, 1.0));
    }
  }
  const auto cal_dir = run_dir / "calibration";
  if (!fs::exists(cal_dir)) return;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cal_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::map<std::string, Series> by_stage;
    for (const auto& r : read_table(file)) {
      auto& s = by_stage[r.at("stage")];
      s.label = r.at("stage");
      s.points.emplace_back(parse_number(r.at("mean_predicted")), parse_number(r.at("observed")));
    }
    std::vector<Series> series;
    for (const auto& [name, s] : by_stage) series.push_back(s);
    transfer::write_atomically(out_dir / ("calibration__" + file.stem().string() + ".svg"),
                               line_chart_svg(file.stem().string(), "mean predicted", "observed frequency", series,
                                              0.0, 1.0, true));
  }
}

}  // namespace ew::cli
