#pragma once

#include <cstdint>
#include <vector>

#include "earlywarn/types.hpp"

namespace ew::learners {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

// Binary tree over dense rows; x[feature] <= threshold goes left.
struct Tree {
  std::vector<TreeNode> nodes;

  template <typename Row>
  double predict(const Row& x) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(k)];
      k = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
  }

  bool uses_feature(int j) const;
};

// Per-column quantization shared by the tree learners. Columns with at most
// max_bins distinct values are represented exactly; split thresholds are the
// midpoints between the largest value of one bin and the smallest of the next.
class BinnedMatrix {
 public:
  BinnedMatrix(const Eigen::Ref<const Matrix>& x, int max_bins = 64);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(thresholds_.size()); }
  int n_bins(Eigen::Index j) const { return static_cast<int>(thresholds_[static_cast<std::size_t>(j)].size()) + 1; }
  std::uint16_t bin(Eigen::Index i, Eigen::Index j) const {
    return bins_[static_cast<std::size_t>(j * rows_ + i)];
  }
  // Threshold separating bin b from bin b + 1.
  double threshold(Eigen::Index j, int b) const {
    return thresholds_[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
  }

 private:
  Eigen::Index rows_ = 0;
  std::vector<std::uint16_t> bins_;
  std::vector<std::vector<double>> thresholds_;
};

}  // namespace ew::learners
