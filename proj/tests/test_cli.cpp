#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>

#include "cellsift/table.hpp"
#include "json.hpp"
#include "support.hpp"

using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string err;
};

// Runs the CLI with stderr captured to a file.
Run cli(const testing::TempDir& dir, const std::string& args) {
  const auto err = dir.file("stderr.txt");
  const std::string cmd = std::string(CELLSIFT_CLI) + " " + args + " > " + dir.file("stdout.txt") + " 2> " + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(err)};
}

struct Data {
  testing::TempDir dir{"cli"};
  std::string d = dir.file("d.csv"), g = dir.file("g.csv");
  Data() { REQUIRE(cli(dir, "generate --scenario convergence --rows 400 --seed 3 --dirty-out " + d + " --truth-out " + g).code == 0); }
  std::string base() const { return "run --data " + d + " --ground-truth " + g + " --committee-size 7 --embedding-dim 8"; }
};

}  // namespace

TEST_CASE("oracle run stays within budget and writes the report") {
  Data data;
  const auto r = cli(data.dir, data.base() + " --budget 300 --strategy mc --seed 42 --report " + data.dir.file("r.json") +
                                   " --run-log " + data.dir.file("log.jsonl"));
  REQUIRE(r.code == 0);
  const auto report = json::parse(testing::slurp(data.dir.file("r.json")));
  CHECK(report["labels_used"].get<int>() <= 300);
  for (const char* k : {"final_f1", "final_precision", "final_recall", "labels_used", "per_column", "convergence_curve"}) {
    CHECK(report.contains(k));
  }
  CHECK(report["strategy"] == "mc");
  CHECK(report["seed"] == 42);

  REQUIRE(cli(data.dir, "curve --run-log " + data.dir.file("log.jsonl") + " --out " + data.dir.file("c.csv")).code == 0);
  CHECK(testing::slurp(data.dir.file("c.csv")).rfind("labels_used,mean_f1,std_f1,mean_p,mean_r\n", 0) == 0);
}

TEST_CASE("same command twice gives byte-identical reports") {
  Data data;
  const auto args = data.base() + " --budget 150 --strategy ra --seed 9 --report ";
  REQUIRE(cli(data.dir, args + data.dir.file("a.json")).code == 0);
  REQUIRE(cli(data.dir, args + data.dir.file("b.json")).code == 0);
  CHECK(testing::slurp(data.dir.file("a.json")) == testing::slurp(data.dir.file("b.json")));
  REQUIRE(cli(data.dir, data.base() + " --budget 150 --strategy ra --seed 10 --report " + data.dir.file("c.json")).code == 0);
  CHECK(testing::slurp(data.dir.file("a.json")) != testing::slurp(data.dir.file("c.json")));
}

TEST_CASE("resume from a snapshot finishes like an uninterrupted run") {
  Data data;
  const auto args = data.base() + " --budget 140 --seed 4";
  REQUIRE(cli(data.dir, args + " --report " + data.dir.file("full.json")).code == 0);
  REQUIRE(cli(data.dir, args + " --stop-after 9 --snapshot " + data.dir.file("s.json") + " --report " + data.dir.file("half.json")).code == 0);
  REQUIRE(cli(data.dir, "run --data " + data.d + " --ground-truth " + data.g + " --resume " + data.dir.file("s.json") +
                            " --report " + data.dir.file("resumed.json"))
              .code == 0);
  CHECK(testing::slurp(data.dir.file("resumed.json")) == testing::slurp(data.dir.file("full.json")));
  CHECK(testing::slurp(data.dir.file("half.json")) != testing::slurp(data.dir.file("full.json")));
}

TEST_CASE("configuration errors exit 2") {
  Data data;
  auto r = cli(data.dir, data.base() + " --budget 10");
  CHECK(r.code == 2);
  CHECK(r.err.find("BudgetExhausted") != std::string::npos);
  CHECK(cli(data.dir, "run --data " + data.d + " --budget 300").code == 2);  // no ground truth
  CHECK(cli(data.dir, data.base() + " --strategy best").code == 2);
  CHECK(cli(data.dir, data.base() + " --budget 300 --batch-size 0").code == 2);
  CHECK(cli(data.dir, "run --unknown-flag").code == 2);
  CHECK(cli(data.dir, "").code == 2);
  testing::spit(data.dir.file("bad-config.json"), "{nope");
  CHECK(cli(data.dir, data.base() + " --config " + data.dir.file("bad-config.json")).code == 2);
  CHECK(cli(data.dir, "generate --scenario nope --dirty-out x --truth-out y").code == 2);
}

TEST_CASE("data errors exit 3") {
  Data data;
  CHECK(cli(data.dir, "run --data /nonexistent.csv --ground-truth " + data.g).code == 3);
  testing::spit(data.dir.file("ragged.csv"), "a,b\n1,2\n3\n");
  auto r = cli(data.dir, "run --data " + data.dir.file("ragged.csv") + " --ground-truth " + data.g);
  CHECK(r.code == 3);
  CHECK(r.err.find("RaggedRows") != std::string::npos);
  testing::spit(data.dir.file("small.csv"), "a,b\n1,2\n");
  CHECK(cli(data.dir, "run --data " + data.d + " --ground-truth " + data.dir.file("small.csv")).code == 3);
  testing::spit(data.dir.file("junk.json"), "{");
  CHECK(cli(data.dir, "run --data " + data.d + " --ground-truth " + data.g + " --resume " + data.dir.file("junk.json")).code == 3);
  CHECK(cli(data.dir, "curve --run-log /nonexistent.jsonl").code == 3);
}

TEST_CASE("inject") {
  testing::TempDir dir("cli-inject");
  testing::spit(dir.file("clean.csv"), "name,city\nAnn,London\nBob,Paris\nCy,Rome\nDi,Oslo\n");
  const auto args = "inject --clean " + dir.file("clean.csv") + " --dirty-out " + dir.file("d.csv") + " --truth-out " + dir.file("g.csv") + " --plan ";

  testing::spit(dir.file("zero.json"), R"({"seed":1,"columns":[{"column":"city","rate":0.0}]})");
  REQUIRE(cli(dir, args + dir.file("zero.json")).code == 0);
  CHECK(testing::slurp(dir.file("d.csv")) == testing::slurp(dir.file("g.csv")));
  CHECK(testing::slurp(dir.file("g.csv")) == testing::slurp(dir.file("clean.csv")));

  testing::spit(dir.file("all.json"), R"({"seed":1,"columns":[{"column":"city","rate":1.0,"types":["typo","missing"]}]})");
  REQUIRE(cli(dir, args + dir.file("all.json")).code == 0);
  const auto dirty = cellsift::load_csv(dir.file("d.csv"));
  const auto clean = cellsift::load_csv(dir.file("clean.csv"));
  for (std::size_t i = 0; i < clean.n_rows(); ++i) {
    CHECK(dirty.at(i, 1) != clean.at(i, 1));
    CHECK(dirty.at(i, 0) == clean.at(i, 0));
  }

  testing::spit(dir.file("missing.json"), R"({"columns":[{"column":"country","rate":0.1}]})");
  CHECK(cli(dir, args + dir.file("missing.json")).code == 2);
  CHECK(cli(dir, args + dir.file("nothing.json")).code == 3);
}

TEST_CASE("help and version") {
  testing::TempDir dir("cli-help");
  CHECK(cli(dir, "--help").code == 0);
  CHECK(cli(dir, "--version").code == 0);
  CHECK(cli(dir, "run --help").code == 0);
}
