#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "earlywarn/types.hpp"

namespace ew {

// Students x named columns. Row i of `values` belongs to students[i].
struct FeatureFrame {
  std::vector<std::string> students;
  std::vector<std::string> columns;
  Matrix values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  // -1 when absent.
  Eigen::Index column_index(const std::string& name) const;
  // Columns in the requested order; throws SchemaError when one is missing.
  FeatureFrame select(const std::vector<std::string>& names) const;
  FeatureFrame select_rows(const std::vector<Eigen::Index>& rows) const;
};

// Shortest round-trip decimal; NaN is written as "NaN".
std::string format_number(double v);
double parse_number(const std::string& s);

void write_frame_csv(std::ostream& out, const FeatureFrame& frame);
FeatureFrame read_frame_csv(std::istream& in);

}  // namespace ew
