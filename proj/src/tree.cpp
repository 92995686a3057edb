#include "earlywarn/tree.hpp"

#include <algorithm>

namespace ew::learners {

bool Tree::uses_feature(int j) const {
  return std::any_of(nodes.begin(), nodes.end(), [j](const TreeNode& n) { return n.feature == j; });
}

BinnedMatrix::BinnedMatrix(const Eigen::Ref<const Matrix>& x, int max_bins) : rows_(x.rows()) {
  const auto n = x.rows();
  bins_.assign(static_cast<std::size_t>(n * x.cols()), 0);
  thresholds_.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = x(i, j);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    for (double v : sorted)
      if (uniq.empty() || v != uniq.back()) uniq.push_back(v);

    // Upper value of each bin.
    std::vector<double> uppers;
    if (static_cast<int>(uniq.size()) <= max_bins) {
      uppers = uniq;
    } else {
      for (int q = 1; q < max_bins; ++q) {
        const double cut = sorted[static_cast<std::size_t>(q) * sorted.size() / static_cast<std::size_t>(max_bins)];
        if (uppers.empty() || cut > uppers.back()) uppers.push_back(cut);
      }
      if (uppers.back() != uniq.back()) uppers.push_back(uniq.back());
    }
    auto& th = thresholds_[static_cast<std::size_t>(j)];
    for (std::size_t b = 0; b + 1 < uppers.size(); ++b) {
      const double next = *std::upper_bound(uniq.begin(), uniq.end(), uppers[b]);
      const double mid = uppers[b] + (next - uppers[b]) / 2.0;
      // Adjacent doubles can round the midpoint up onto the next value.
      th.push_back(mid < next ? mid : uppers[b]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto it = std::lower_bound(uppers.begin(), uppers.end(), x(i, j));
      bins_[static_cast<std::size_t>(j * n + i)] = static_cast<std::uint16_t>(it - uppers.begin());
    }
  }
}

}  // namespace ew::learners
