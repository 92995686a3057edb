#include "earlywarn/frame.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"

namespace ew {

Eigen::Index FeatureFrame::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == name) return static_cast<Eigen::Index>(j);
  return -1;
}

FeatureFrame FeatureFrame::select(const std::vector<std::string>& names) const {
  FeatureFrame out;
  out.students = students;
  out.columns = names;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto idx = column_index(names[j]);
    if (idx < 0) throw SchemaError("missing column '" + names[j] + "'");
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(idx);
  }
  return out;
}

FeatureFrame FeatureFrame::select_rows(const std::vector<Eigen::Index>& rows) const {
  FeatureFrame out;
  out.columns = columns;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.students.push_back(students[static_cast<std::size_t>(rows[i])]);
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (v == 0.0) return "0";
  return fmt::format("{}", v);
}

double parse_number(const std::string& s) {
  if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DomainError("not a number: '" + s + "'");
  return v;
}

void write_frame_csv(std::ostream& out, const FeatureFrame& frame) {
  out << "student_id";
  for (const auto& c : frame.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < frame.values.rows(); ++i) {
    out << frame.students[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < frame.values.cols(); ++j) out << ',' << format_number(frame.values(i, j));
    out << '\n';
  }
}

FeatureFrame read_frame_csv(std::istream& in) {
  FeatureFrame frame;
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (frame.columns.empty() && lineno == 1) {
      if (cells.empty() || cells[0] != "student_id") throw ParseError(lineno, "missing header");
      frame.columns.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != frame.columns.size() + 1)
      throw ParseError(lineno, "column count does not match header");
    frame.students.push_back(cells[0]);
    std::vector<double> row;
    try {
      for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_number(cells[j]));
    } catch (const DomainError& e) {
      throw ParseError(lineno, e.what());
    }
    rows.push_back(std::move(row));
  }
  frame.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(frame.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      frame.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return frame;
}

}  // namespace ew
