#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "earlywarn/errors.hpp"
#include "earlywarn/features.hpp"

namespace ew::features {

const std::vector<Family>& replication_exclusions() {
  static const std::vector<Family> kExclusions = {Family::par1, Family::eng4,    Family::eng8,
                                                  Family::per1, Family::per1dup, Family::per3};
  return kExclusions;
}

ScreenResult screen_collinear(const FeatureFrame& frame, double cutoff,
                              const std::optional<std::vector<Family>>& forced) {
  if (frame.rows() < 2) throw ParameterError("screening needs at least two rows");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw ParameterError("cutoff must lie in (0, 1)");

  ScreenResult result;
  const auto p = frame.cols();
  std::vector<bool> dropped(static_cast<std::size_t>(p), false);

  if (forced) {
    const std::set<Family> families(forced->begin(), forced->end());
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto id = FeatureId::parse(frame.columns[static_cast<std::size_t>(j)]);
      if (families.count(id.family)) {
        dropped[static_cast<std::size_t>(j)] = true;
        result.dropped.push_back({frame.columns[static_cast<std::size_t>(j)], "forced",
                                  std::numeric_limits<double>::quiet_NaN()});
      }
    }
  }

  // Standardized copies of the non-constant survivors.
  std::vector<Eigen::Index> active;
  const double n = static_cast<double>(frame.rows());
  Matrix z(frame.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (dropped[static_cast<std::size_t>(j)]) continue;
    const auto col = frame.values.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      result.constant_columns.push_back(frame.columns[static_cast<std::size_t>(j)]);
      continue;
    }
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
    z.col(j) = (col.array() - mean) / sd;
    active.push_back(j);
  }

  const auto m = static_cast<Eigen::Index>(active.size());
  Matrix za(frame.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) za.col(k) = z.col(active[static_cast<std::size_t>(k)]);
  Matrix r = (za.transpose() * za) / (n - 1.0);
  Matrix abs_r = r.cwiseAbs();
  std::vector<bool> alive(static_cast<std::size_t>(m), true);

  auto mean_abs = [&](Eigen::Index a) {
    double s = 0;
    int cnt = 0;
    for (Eigen::Index b = 0; b < m; ++b) {
      if (b == a || !alive[static_cast<std::size_t>(b)]) continue;
      s += abs_r(a, b);
      ++cnt;
    }
    return cnt ? s / cnt : 0.0;
  };

  while (true) {
    double best = cutoff;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (!alive[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = a + 1; b < m; ++b) {
        if (!alive[static_cast<std::size_t>(b)]) continue;
        if (abs_r(a, b) > best) {
          best = abs_r(a, b);
          bi = a;
          bj = b;
        }
      }
    }
    if (bi < 0) break;
    const double ma = mean_abs(bi), mb = mean_abs(bj);
    const auto& na = frame.columns[static_cast<std::size_t>(active[static_cast<std::size_t>(bi)])];
    const auto& nb = frame.columns[static_cast<std::size_t>(active[static_cast<std::size_t>(bj)])];
    Eigen::Index drop = bj;
    if (ma > mb || (ma == mb && na > nb)) drop = bi;
    const Eigen::Index keep = drop == bi ? bj : bi;
    alive[static_cast<std::size_t>(drop)] = false;
    dropped[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = true;
    result.dropped.push_back({drop == bi ? na : nb, drop == bi ? nb : na, r(drop, keep)});
  }

  std::vector<std::string> keep;
  for (Eigen::Index j = 0; j < p; ++j)
    if (!dropped[static_cast<std::size_t>(j)]) keep.push_back(frame.columns[static_cast<std::size_t>(j)]);
  result.frame = frame.select(keep);
  return result;
}

}  // namespace ew::features
