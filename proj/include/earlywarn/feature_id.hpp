#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace ew::features {

enum class Family {
  eng1, eng2, eng3, eng4, eng5, eng6, eng7, eng8, eng9, eng10,
  per1, per2, per3, per4,
  per1dup,  // literal copy of per1; emitted only for replication screening
  par1, par2,
  lecture_clicks, forum,
};

// Task-class cell: incentivized digital (I), non-incentivized digital (NI),
// paper-based (P), or course-wide resources.
enum class ClassCell { I, NI, P, course_level };
enum class Window { redu1, redu2, na };
enum class Statistic { raw_week, cum_mean, cum_sd };
// Early-reset aggregation prefixes columns with the block they summarize.
enum class Block { none, frozen, reset };

std::string_view to_string(Family f);
std::string_view to_string(ClassCell c);
std::string_view to_string(Window w);
std::string_view to_string(Statistic s);
std::string_view to_string(Block b);

bool is_performance(Family f);

struct FeatureId {
  Family family = Family::eng1;
  ClassCell task_class = ClassCell::I;
  Window window = Window::redu1;
  Statistic statistic = Statistic::raw_week;
  Block block = Block::none;

  // "[frozen.|reset.]family.class.window.statistic", e.g. "eng1.I.redu1.raw_week".
  std::string to_string() const;
  // Throws DomainError on malformed names.
  static FeatureId parse(std::string_view name);

  FeatureId with(Statistic s, Block b = Block::none) const {
    FeatureId out = *this;
    out.statistic = s;
    out.block = b;
    return out;
  }

  auto operator<=>(const FeatureId&) const = default;
};

}  // namespace ew::features
