#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "earlywarn/learners.hpp"

namespace ew::learners {

enum class GridPreset { paper, small };

std::string to_string(GridPreset g);
std::optional<GridPreset> preset_from_string(std::string_view s);

// Candidate values per learner. Boosting configurations are evaluated at
// round checkpoints up to gbt_rounds.
struct HyperGrid {
  std::vector<double> en_alpha;
  std::vector<double> en_lambda;
  std::vector<int> rf_mtry;
  std::vector<int> rf_min_node_size;
  std::vector<int> rf_n_trees;
  std::vector<int> gbt_max_depth;
  std::vector<double> gbt_min_child_weight;
  std::vector<double> gbt_subsample;
  std::vector<double> gbt_colsample;
  double gbt_learning_rate = 0.1;
  int gbt_rounds = 200;
};

// Inclusive of both endpoints.
std::vector<double> linspace(double lo, double hi, int n);
std::vector<double> logspace(double lo, double hi, int n);

// mtry candidates around d = floor(sqrt(p)); values above p are dropped.
std::vector<int> paper_mtry(int p);

// p is the number of predictors (drives mtry).
HyperGrid make_grid(GridPreset preset, int p);

// Cartesian product for one learner, in a fixed nested order.
std::vector<HyperParams> configurations(const HyperGrid& grid, LearnerKind kind);

nlohmann::json grid_to_json(const HyperGrid& grid);
nlohmann::json params_to_json(const HyperParams& params);
HyperParams params_from_json(const nlohmann::json& j);

}  // namespace ew::learners
