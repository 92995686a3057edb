#pragma once

#include <optional>
#include <string>
#include <vector>

#include "earlywarn/features.hpp"
#include "earlywarn/frame.hpp"

namespace ew::aggregate {

enum class Strategy { progressive, early_reset };

std::string to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);

inline constexpr int kResetWeek = 5;

struct AggregatedMatrix {
  FeatureFrame frame;
  int prediction_week = 1;
  Strategy strategy = Strategy::progressive;
};

// Column-wise mean and sample SD (n - 1) of weeks [first, last] (1-based,
// inclusive). A single week yields SD 0.
template <typename Derived>
void block_mean_sd(const std::vector<Derived>& weeks, int first, int last,
                   Eigen::MatrixBase<Derived>& mean, Eigen::MatrixBase<Derived>& sd) {
  const auto count = static_cast<double>(last - first + 1);
  mean.derived().setZero(weeks.front().rows(), weeks.front().cols());
  for (int w = first; w <= last; ++w) mean.derived() += weeks[static_cast<std::size_t>(w - 1)];
  mean.derived() /= count;
  sd.derived().setZero(weeks.front().rows(), weeks.front().cols());
  if (last == first) return;
  for (int w = first; w <= last; ++w)
    sd.derived().array() += (weeks[static_cast<std::size_t>(w - 1)] - mean.derived()).array().square();
  sd.derived() = (sd.derived() / (count - 1.0)).cwiseSqrt();
}

// Cumulative mean/SD over weeks 1..k; identical columns for every k.
AggregatedMatrix aggregate_progressive(const features::WeeklyFeatures& weekly, int k);

// Weeks before reset_week form a frozen block; from reset_week on a second
// cumulative window restarts. Performance families appear only in the
// frozen block. For k < reset_week the result equals progressive.
AggregatedMatrix aggregate_early_reset(const features::WeeklyFeatures& weekly, int k,
                                       int reset_week = kResetWeek);

AggregatedMatrix aggregate(const features::WeeklyFeatures& weekly, Strategy strategy, int k);

}  // namespace ew::aggregate
