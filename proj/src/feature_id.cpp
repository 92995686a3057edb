#include "earlywarn/feature_id.hpp"

#include <array>
#include <vector>

#include "earlywarn/errors.hpp"

namespace ew::features {
namespace {

constexpr std::array<std::string_view, 19> kFamilyNames = {
    "eng1", "eng2", "eng3", "eng4", "eng5", "eng6",    "eng7", "eng8", "eng9",           "eng10",
    "per1", "per2", "per3", "per4", "per1dup", "par1", "par2", "lecture_clicks", "forum"};
constexpr std::array<std::string_view, 4> kClassNames = {"I", "NI", "P", "course_level"};
constexpr std::array<std::string_view, 3> kWindowNames = {"redu1", "redu2", "na"};
constexpr std::array<std::string_view, 3> kStatNames = {"raw_week", "cum_mean", "cum_sd"};
constexpr std::array<std::string_view, 3> kBlockNames = {"", "frozen", "reset"};

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::string_view, N>& names, std::string_view s, std::string_view full) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s && !s.empty()) return static_cast<Enum>(i);
  throw DomainError("unknown component '" + std::string(s) + "' in feature name '" +
                    std::string(full) + "'");
}

}  // namespace

std::string_view to_string(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }
std::string_view to_string(ClassCell c) { return kClassNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Window w) { return kWindowNames[static_cast<std::size_t>(w)]; }
std::string_view to_string(Statistic s) { return kStatNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Block b) { return kBlockNames[static_cast<std::size_t>(b)]; }

bool is_performance(Family f) {
  return f == Family::per1 || f == Family::per2 || f == Family::per3 || f == Family::per4 ||
         f == Family::per1dup;
}

std::string FeatureId::to_string() const {
  std::string out;
  if (block != Block::none) {
    out += ew::features::to_string(block);
    out += '.';
  }
  out += ew::features::to_string(family);
  out += '.';
  out += ew::features::to_string(task_class);
  out += '.';
  out += ew::features::to_string(window);
  out += '.';
  out += ew::features::to_string(statistic);
  return out;
}

FeatureId FeatureId::parse(std::string_view name) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto pos = name.find('.', begin);
    parts.push_back(name.substr(begin, pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  FeatureId id;
  std::size_t i = 0;
  if (parts.size() == 5) {
    id.block = lookup<Block>(kBlockNames, parts[0], name);
    i = 1;
  } else if (parts.size() != 4) {
    throw DomainError("feature name '" + std::string(name) + "' must have 4 or 5 components");
  }
  id.family = lookup<Family>(kFamilyNames, parts[i], name);
  id.task_class = lookup<ClassCell>(kClassNames, parts[i + 1], name);
  id.window = lookup<Window>(kWindowNames, parts[i + 2], name);
  id.statistic = lookup<Statistic>(kStatNames, parts[i + 3], name);
  return id;
}

}  // namespace ew::features
