#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "earlywarn/trace.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(EW_TEST_WORKDIR) / "cli";

int run(const std::string& args) {
  const std::string cmd = std::string(EW_CLI_PATH) + " " + args + " >/dev/null 2>" + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// A fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const auto dir = kWork / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    fs::create_directories(kWork);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("run --out x") == 2);
    CHECK(run("--help") == 0);
  }

  TEST_CASE("a bad spec is a usage error") {
    const auto dir = scratch("badspec");
    put(dir / "spec.json", R"({"prevalence": 1.5})");
    CHECK(run("simulate --spec " + (dir / "spec.json").string() + " --out " + (dir / "out").string()) == 2);
    put(dir / "broken.json", "{");
    CHECK(run("simulate --spec " + (dir / "broken.json").string() + " --out " + (dir / "out").string()) == 2);
  }

  TEST_CASE("simulate is deterministic and featurize reads its output") {
    const auto dir = scratch("simulate");
    put(dir / "spec.json", R"({"n_students": 40, "seed": 12, "course_id": "S", "prevalence": 0.5})");
    const auto spec = (dir / "spec.json").string();
    REQUIRE(run("simulate --spec " + spec + " --out " + (dir / "one").string()) == 0);
    REQUIRE(run("simulate --spec " + spec + " --out " + (dir / "two").string()) == 0);
    for (const char* f : {"course.json", "events.csv", "grades.csv"}) {
      CHECK(fs::exists(dir / "one" / f));
      CHECK(slurp(dir / "one" / f) == slurp(dir / "two" / f));
    }

    const auto one = dir / "one";
    REQUIRE(run("featurize --events " + (one / "events.csv").string() + " --config " + (one / "course.json").string() +
                " --grades " + (one / "grades.csv").string() + " --out " + (dir / "feat").string()) == 0);
    CHECK(fs::exists(dir / "feat" / "weekly_features.csv"));
    CHECK(fs::exists(dir / "feat" / "progressive" / "week_12.csv"));
    CHECK(fs::exists(dir / "feat" / "early_reset" / "week_05.csv"));
  }

  TEST_CASE("parse failures exit with code 3") {
    const auto dir = scratch("parse");
    put(dir / "spec.json", R"({"n_students": 10, "seed": 1, "prevalence": 0.5})");
    REQUIRE(run("simulate --spec " + (dir / "spec.json").string() + " --out " + dir.string()) == 0);
    put(dir / "bad.csv", "s1,not-a-time,page_view,x,,,\n");
    CHECK(run("featurize --events " + (dir / "bad.csv").string() + " --config " + (dir / "course.json").string() +
              " --out " + (dir / "f").string()) == 3);
  }

  TEST_CASE("an empty event log gives zero matrices and a warning") {
    const auto dir = scratch("empty");
    put(dir / "spec.json", R"({"n_students": 10, "seed": 1, "prevalence": 0.5})");
    REQUIRE(run("simulate --spec " + (dir / "spec.json").string() + " --out " + dir.string()) == 0);
    put(dir / "none.csv", std::string(ew::trace::kEventLogHeader) + "\n");
    REQUIRE(run("featurize --events " + (dir / "none.csv").string() + " --config " + (dir / "course.json").string() +
                " --grades " + (dir / "grades.csv").string() + " --out " + (dir / "f").string()) == 0);
    CHECK(slurp(kWork / "stderr.txt").find("warning") != std::string::npos);
    std::istringstream in(slurp(dir / "f" / "progressive" / "week_03.csv"));
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::stringstream cells(line);
      std::string cell;
      std::getline(cells, cell, ',');  // student id
      while (std::getline(cells, cell, ',')) CHECK(cell == "0");
    }
    CHECK(rows == 10);
  }

  TEST_CASE("run writes results and repeats byte for byte") {
    const auto dir = scratch("run");
    put(dir / "a.json", R"({"n_students": 80, "seed": 1, "course_id": "A", "prevalence": 0.5})");
    put(dir / "b.json", R"({"n_students": 80, "seed": 2, "course_id": "B", "prevalence": 0.3})");
    REQUIRE(run("simulate --spec " + (dir / "a.json").string() + " --spec " + (dir / "b.json").string() + " --out " +
                (dir / "sim").string()) == 0);
    const std::string common = " --reference " + (dir / "sim" / "A").string() + " --target " +
                               (dir / "sim" / "B").string() + " --weeks 2,4 --learners EN --strategy progressive --folds 3";
    REQUIRE(run("run" + common + " --out " + (dir / "r1").string()) == 0);
    REQUIRE(run("run" + common + " --out " + (dir / "r2").string()) == 0);
    for (const char* f : {"results.csv", "importance.csv", "alignment.csv", "manifest.json"}) {
      CHECK(fs::exists(dir / "r1" / f));
      CHECK(slurp(dir / "r1" / f) == slurp(dir / "r2" / f));
    }
    // One in-sample row and two transfer rows per week.
    std::istringstream in(slurp(dir / "r1" / "results.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
    CHECK(run("report --run " + (dir / "r1").string()) == 0);
    CHECK(run("run" + common + " --out " + (dir / "r3").string() + " --learners XX") == 2);
  }
}
