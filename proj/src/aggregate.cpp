#include "earlywarn/aggregate.hpp"

#include "earlywarn/errors.hpp"

namespace ew::aggregate {

using features::Block;
using features::Statistic;

std::string to_string(Strategy s) { return s == Strategy::progressive ? "progressive" : "early_reset"; }

std::optional<Strategy> strategy_from_string(std::string_view s) {
  if (s == "progressive") return Strategy::progressive;
  if (s == "early_reset") return Strategy::early_reset;
  return std::nullopt;
}

namespace {

void check_week(const features::WeeklyFeatures& weekly, int k) {
  if (k < 1 || k > weekly.n_weeks())
    throw RangeError("prediction week " + std::to_string(k) + " outside 1.." +
                     std::to_string(weekly.n_weeks()));
}

// Appends mean/sd column pairs for the selected weekly columns.
void append_block(FeatureFrame& out, const features::WeeklyFeatures& weekly, int first, int last,
                  Block block, bool skip_performance) {
  Matrix mean, sd;
  block_mean_sd(weekly.weeks, first, last, mean, sd);
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < weekly.columns.size(); ++j) {
    if (skip_performance && features::is_performance(weekly.columns[j].family)) continue;
    cols.push_back(static_cast<Eigen::Index>(j));
  }
  const Eigen::Index offset = out.values.cols();
  Matrix grown(mean.rows(), offset + 2 * static_cast<Eigen::Index>(cols.size()));
  grown.leftCols(offset) = out.values;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& id = weekly.columns[static_cast<std::size_t>(cols[c])];
    grown.col(offset + 2 * static_cast<Eigen::Index>(c)) = mean.col(cols[c]);
    grown.col(offset + 2 * static_cast<Eigen::Index>(c) + 1) = sd.col(cols[c]);
    out.columns.push_back(id.with(Statistic::cum_mean, block).to_string());
    out.columns.push_back(id.with(Statistic::cum_sd, block).to_string());
  }
  out.values = std::move(grown);
}

}  // namespace

AggregatedMatrix aggregate_progressive(const features::WeeklyFeatures& weekly, int k) {
  check_week(weekly, k);
  AggregatedMatrix out;
  out.prediction_week = k;
  out.strategy = Strategy::progressive;
  out.frame.students = weekly.students;
  out.frame.values.resize(static_cast<Eigen::Index>(weekly.students.size()), 0);
  append_block(out.frame, weekly, 1, k, Block::none, false);
  return out;
}

AggregatedMatrix aggregate_early_reset(const features::WeeklyFeatures& weekly, int k, int reset_week) {
  check_week(weekly, k);
  if (reset_week < 2) throw ParameterError("reset week must be at least 2");
  if (k < reset_week) {
    auto out = aggregate_progressive(weekly, k);
    out.strategy = Strategy::early_reset;
    return out;
  }
  AggregatedMatrix out;
  out.prediction_week = k;
  out.strategy = Strategy::early_reset;
  out.frame.students = weekly.students;
  out.frame.values.resize(static_cast<Eigen::Index>(weekly.students.size()), 0);
  append_block(out.frame, weekly, 1, reset_week - 1, Block::frozen, false);
  append_block(out.frame, weekly, reset_week, k, Block::reset, true);
  return out;
}

AggregatedMatrix aggregate(const features::WeeklyFeatures& weekly, Strategy strategy, int k) {
  return strategy == Strategy::progressive ? aggregate_progressive(weekly, k)
                                           : aggregate_early_reset(weekly, k);
}

}  // namespace ew::aggregate
