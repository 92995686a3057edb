#include "earlywarn/hypergrid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"

namespace ew::learners {

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::elastic_net: return "EN";
    case LearnerKind::forest: return "RF";
    case LearnerKind::boost: return "GBT";
  }
  return "?";
}

std::optional<LearnerKind> learner_from_string(std::string_view s) {
  if (s == "EN" || s == "en") return LearnerKind::elastic_net;
  if (s == "RF" || s == "rf") return LearnerKind::forest;
  if (s == "GBT" || s == "gbt") return LearnerKind::boost;
  return std::nullopt;
}

LearnerKind kind_of(const HyperParams& params) {
  return static_cast<LearnerKind>(params.index());
}

std::string describe(const HyperParams& params) {
  struct Visitor {
    std::string operator()(const ElasticNetParams& p) const {
      return fmt::format("alpha={} lambda={}", p.alpha, p.lambda);
    }
    std::string operator()(const ForestParams& p) const {
      return fmt::format("mtry={} min_node_size={} n_trees={}", p.mtry, p.min_node_size, p.n_trees);
    }
    std::string operator()(const BoostParams& p) const {
      return fmt::format("max_depth={} min_child_weight={} subsample={} colsample={} n_rounds={}", p.max_depth,
                         p.min_child_weight, p.subsample, p.colsample, p.n_rounds);
    }
  };
  return std::visit(Visitor{}, params);
}

std::string to_string(GridPreset g) { return g == GridPreset::paper ? "paper" : "small"; }

std::optional<GridPreset> preset_from_string(std::string_view s) {
  if (s == "paper") return GridPreset::paper;
  if (s == "small") return GridPreset::small;
  return std::nullopt;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ParameterError("linspace needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

std::vector<double> logspace(double lo, double hi, int n) {
  if (!(lo > 0 && hi > 0)) throw ParameterError("logspace needs positive endpoints");
  auto e = linspace(std::log10(lo), std::log10(hi), n);
  for (auto& v : e) v = std::pow(10.0, v);
  e.front() = lo;
  e.back() = hi;
  return e;
}

std::vector<int> paper_mtry(int p) {
  if (p < 1) throw ParameterError("need at least one predictor");
  const int d = static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
  std::vector<int> out;
  for (int m = (d + 1) / 2; m <= 3 * d / 2; ++m) out.push_back(m);
  out.push_back(5 * d / 2);
  out.push_back(3 * d);
  std::erase_if(out, [p](int m) { return m < 1 || m > p; });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HyperGrid make_grid(GridPreset preset, int p) {
  HyperGrid g;
  if (preset == GridPreset::paper) {
    g.en_alpha = linspace(0.0, 1.0, 11);
    g.en_lambda = logspace(1e-3, 1e3, 100);
    g.rf_mtry = paper_mtry(p);
    g.rf_min_node_size = {10, 12, 15, 17, 20, 23, 25, 30};
    g.rf_n_trees = {500, 1000, 2000};
    g.gbt_max_depth = {3, 4, 5, 6, 7, 8, 9, 10};
    g.gbt_min_child_weight = linspace(1.0, 10.0, 8);
    g.gbt_subsample = linspace(0.5, 1.0, 8);
    g.gbt_colsample = linspace(0.5, 1.0, 8);
  } else {
    g.en_alpha = {0.0, 0.25, 0.5, 0.75, 1.0};
    g.en_lambda = logspace(1e-3, 1e3, 22);
    const int d = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    g.rf_mtry = {(d + 1) / 2, d, 3 * d / 2};
    std::erase_if(g.rf_mtry, [p](int m) { return m < 1 || m > p; });
    std::sort(g.rf_mtry.begin(), g.rf_mtry.end());
    g.rf_mtry.erase(std::unique(g.rf_mtry.begin(), g.rf_mtry.end()), g.rf_mtry.end());
    g.rf_min_node_size = {10, 20};
    g.rf_n_trees = {100};
    g.gbt_max_depth = {3, 4};
    g.gbt_min_child_weight = {1.0, 10.0};
    g.gbt_subsample = {0.8};
    g.gbt_colsample = {0.8};
  }
  return g;
}

std::vector<HyperParams> configurations(const HyperGrid& grid, LearnerKind kind) {
  std::vector<HyperParams> out;
  switch (kind) {
    case LearnerKind::elastic_net:
      for (double a : grid.en_alpha)
        for (double l : grid.en_lambda) out.emplace_back(ElasticNetParams{a, l});
      break;
    case LearnerKind::forest:
      for (int m : grid.rf_mtry)
        for (int s : grid.rf_min_node_size)
          for (int t : grid.rf_n_trees) out.emplace_back(ForestParams{m, s, t});
      break;
    case LearnerKind::boost:
      for (int d : grid.gbt_max_depth)
        for (double w : grid.gbt_min_child_weight)
          for (double s : grid.gbt_subsample)
            for (double c : grid.gbt_colsample) {
              BoostParams b;
              b.max_depth = d;
              b.min_child_weight = w;
              b.subsample = s;
              b.colsample = c;
              b.learning_rate = grid.gbt_learning_rate;
              b.n_rounds = grid.gbt_rounds;
              out.emplace_back(b);
            }
      break;
  }
  return out;
}

nlohmann::json grid_to_json(const HyperGrid& g) {
  return {{"en_alpha", g.en_alpha},
          {"en_lambda", g.en_lambda},
          {"rf_mtry", g.rf_mtry},
          {"rf_min_node_size", g.rf_min_node_size},
          {"rf_n_trees", g.rf_n_trees},
          {"gbt_max_depth", g.gbt_max_depth},
          {"gbt_min_child_weight", g.gbt_min_child_weight},
          {"gbt_subsample", g.gbt_subsample},
          {"gbt_colsample", g.gbt_colsample},
          {"gbt_learning_rate", g.gbt_learning_rate},
          {"gbt_rounds", g.gbt_rounds}};
}

nlohmann::json params_to_json(const HyperParams& params) {
  struct Visitor {
    nlohmann::json operator()(const ElasticNetParams& p) const {
      return {{"learner", "EN"}, {"alpha", p.alpha}, {"lambda", p.lambda}};
    }
    nlohmann::json operator()(const ForestParams& p) const {
      return {{"learner", "RF"}, {"mtry", p.mtry}, {"min_node_size", p.min_node_size}, {"n_trees", p.n_trees}};
    }
    nlohmann::json operator()(const BoostParams& p) const {
      return {{"learner", "GBT"},       {"max_depth", p.max_depth},
              {"min_child_weight", p.min_child_weight}, {"subsample", p.subsample},
              {"colsample", p.colsample}, {"learning_rate", p.learning_rate},
              {"n_rounds", p.n_rounds},   {"reg_lambda", p.reg_lambda}};
    }
  };
  return std::visit(Visitor{}, params);
}

HyperParams params_from_json(const nlohmann::json& j) {
  try {
    const auto kind = learner_from_string(j.at("learner").get<std::string>());
    if (!kind) throw SchemaError("unknown learner " + j.at("learner").dump());
    switch (*kind) {
      case LearnerKind::elastic_net:
        return ElasticNetParams{j.at("alpha").get<double>(), j.at("lambda").get<double>()};
      case LearnerKind::forest:
        return ForestParams{j.at("mtry").get<int>(), j.at("min_node_size").get<int>(), j.at("n_trees").get<int>()};
      case LearnerKind::boost: {
        BoostParams b;
        b.max_depth = j.at("max_depth").get<int>();
        b.min_child_weight = j.at("min_child_weight").get<double>();
        b.subsample = j.at("subsample").get<double>();
        b.colsample = j.at("colsample").get<double>();
        b.learning_rate = j.at("learning_rate").get<double>();
        b.n_rounds = j.at("n_rounds").get<int>();
        b.reg_lambda = j.at("reg_lambda").get<double>();
        return b;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad hyperparameters: ") + e.what());
  }
  throw SchemaError("bad hyperparameters");
}

}  // namespace ew::learners
