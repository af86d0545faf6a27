#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>
#include <thread>
#include <unistd.h>

#include "cellsift/cellsift.h"
#include "json.hpp"
#include "support.hpp"

using json = nlohmann::json;

namespace {

std::string take(char* p) {
  std::string s = p ? p : "";
  cellsift_string_free(p);
  return s;
}

struct Fixture {
  testing::TempDir dir{"capi"};
  std::string dirty = dir.file("dirty.csv"), truth = dir.file("truth.csv");
  Fixture() {
    REQUIRE(cellsift_generate("convergence", 300, 1, dirty.c_str(), truth.c_str()) == CELLSIFT_OK);
  }
  std::string request(json config = json::object()) const {
    if (config.empty()) config = {{"budget", 120}, {"seed", 3}, {"committee_size", 7}, {"features", {{"embedding_dim", 8}}}};
    return json{{"data", dirty}, {"ground_truth", truth}, {"config", config}}.dump();
  }
};

struct Handle {
  cellsift_session* s = nullptr;
  ~Handle() { cellsift_session_destroy(s); }
};

void step(cellsift_session* s) {
  char* labels = nullptr;
  REQUIRE(cellsift_session_oracle_labels(s, &labels) == CELLSIFT_OK);
  const auto body = take(labels);
  char* summary = nullptr;
  REQUIRE(cellsift_session_submit(s, body.c_str(), &summary) == CELLSIFT_OK);
  take(summary);
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(cellsift_version()) > 0);
  CHECK(std::string(cellsift_status_name(CELLSIFT_E_LABEL_MISMATCH)) == "LabelMismatch");
  CHECK(std::string(cellsift_status_name(CELLSIFT_E_BUDGET_EXHAUSTED)) == "BudgetExhausted");
  CHECK(std::string(cellsift_status_name(CELLSIFT_E_INVALID_ARGUMENT)) == "InvalidArgument");
  CHECK(std::string(cellsift_status_name(CELLSIFT_OK)) == "Ok");
}

TEST_CASE("full oracle session through the C API") {
  Fixture f;
  Handle h;
  REQUIRE(cellsift_session_create(f.request().c_str(), &h.s) == CELLSIFT_OK);

  char* out = nullptr;
  REQUIRE(cellsift_session_batch(h.s, &out) == CELLSIFT_OK);
  const auto batch = json::parse(take(out));
  CHECK_FALSE(batch["finished"].get<bool>());
  REQUIRE(batch["cells"].size() > 0);
  const auto& cell = batch["cells"][0];
  CHECK(cell["tuple"].size() == 8);
  CHECK(cell["value"] == cell["tuple"][cell["col"].get<std::size_t>()]);

  REQUIRE(cellsift_session_run_oracle(h.s) == CELLSIFT_OK);
  int finished = 0;
  REQUIRE(cellsift_session_finished(h.s, &finished) == CELLSIFT_OK);
  CHECK(finished == 1);

  REQUIRE(cellsift_session_report(h.s, &out) == CELLSIFT_OK);
  const auto report = json::parse(take(out));
  CHECK(report["labels_used"].get<int>() <= 120);
  CHECK(report["final_f1"].is_number());
  CHECK(report["per_column"].size() == 8);
  CHECK(report["convergence_curve"].size() > 0);

  REQUIRE(cellsift_session_result(h.s, &out) == CELLSIFT_OK);
  const auto result = json::parse(take(out));
  CHECK(result["errors"].is_array());

  REQUIRE(cellsift_session_explain(h.s, 2, 3, &out) == CELLSIFT_OK);
  const auto ex = json::parse(take(out));
  CHECK(ex["column_name"] == "salary");
  CHECK(ex["text"].get<std::string>().find("salary") != std::string::npos);

  REQUIRE(cellsift_session_feature_names(h.s, 0, &out) == CELLSIFT_OK);
  const auto names = json::parse(take(out));
  CHECK(names.back().get<std::string>().rfind("errprob|col=", 0) == 0);

  REQUIRE(cellsift_session_run_log(h.s, &out) == CELLSIFT_OK);
  const auto log = take(out);
  CHECK(std::count(log.begin(), log.end(), '\n') >= 2);

  REQUIRE(cellsift_session_batch(h.s, &out) == CELLSIFT_OK);
  CHECK(json::parse(take(out))["finished"].get<bool>());
  REQUIRE(cellsift_session_export_labels(h.s, f.dir.file("labels.jsonl").c_str()) == CELLSIFT_OK);
  const auto labels = testing::slurp(f.dir.file("labels.jsonl"));
  CHECK(std::count(labels.begin(), labels.end(), '\n') == report["labels_used"].get<long>());
}

TEST_CASE("errors carry codes and messages") {
  Fixture f;
  cellsift_session* s = nullptr;
  CHECK(cellsift_session_create("{not json", &s) == CELLSIFT_E_DECODE);
  CHECK(s == nullptr);
  CHECK(std::strlen(cellsift_last_error()) > 0);
  CHECK(cellsift_session_create("{}", &s) == CELLSIFT_E_CONFIG);
  CHECK(cellsift_session_create(f.request({{"budget", 5}}).c_str(), &s) == CELLSIFT_E_BUDGET_EXHAUSTED);
  CHECK(std::string(cellsift_last_error()).find("budget") != std::string::npos);
  CHECK(cellsift_session_create(f.request({{"strategy", "nope"}}).c_str(), &s) == CELLSIFT_E_CONFIG);
  CHECK(cellsift_session_create(json{{"data", "/nonexistent.csv"}}.dump().c_str(), &s) == CELLSIFT_E_IO);
  CHECK(cellsift_session_create(json{{"csv", "a,b\n1\n"}}.dump().c_str(), &s) == CELLSIFT_E_RAGGED_ROWS);
  CHECK(cellsift_session_create(json{{"csv", "a,b\n1,2\n"}, {"ground_truth_csv", "a,b\n1,2\n3,4\n"}}.dump().c_str(), &s) ==
        CELLSIFT_E_SHAPE_MISMATCH);
  CHECK(cellsift_session_create(nullptr, &s) == CELLSIFT_E_INVALID_ARGUMENT);
  char* out = nullptr;
  CHECK(cellsift_session_batch(nullptr, &out) == CELLSIFT_E_INVALID_ARGUMENT);

  Handle h;
  REQUIRE(cellsift_session_create(f.request().c_str(), &h.s) == CELLSIFT_OK);
  CHECK(cellsift_session_submit(h.s, R"({"labels":[{"row":0,"col":0,"label":"correct"}]})", &out) ==
        CELLSIFT_E_LABEL_MISMATCH);
  CHECK(cellsift_session_submit(h.s, R"({"labels":[{"row":0}]})", &out) == CELLSIFT_E_DECODE);
  CHECK(cellsift_session_submit(h.s, "[", &out) == CELLSIFT_E_DECODE);
  CHECK(cellsift_session_explain(h.s, 100000, 0, &out) == CELLSIFT_E_OUT_OF_BOUNDS);
  CHECK(cellsift_session_feature_names(h.s, 99, &out) == CELLSIFT_E_OUT_OF_BOUNDS);
  // a successful call clears the message
  REQUIRE(cellsift_session_status(h.s, &out) == CELLSIFT_OK);
  take(out);
  CHECK(std::string(cellsift_last_error()).empty());
}

TEST_CASE("session without ground truth") {
  Fixture f;
  Handle h;
  const auto req = json{{"data", f.dirty}, {"config", {{"budget", 100}}}}.dump();
  REQUIRE(cellsift_session_create(req.c_str(), &h.s) == CELLSIFT_OK);
  char* out = nullptr;
  CHECK(cellsift_session_oracle_labels(h.s, &out) == CELLSIFT_E_CONFIG);
  REQUIRE(cellsift_session_report(h.s, &out) == CELLSIFT_OK);
  CHECK(json::parse(take(out))["final_f1"].is_null());
}

TEST_CASE("inline csv and no-header tables") {
  Handle h;
  std::string csv;
  for (int i = 0; i < 30; ++i) csv += "v" + std::to_string(i % 4) + ",w" + std::to_string(i % 3) + "\n";
  const auto req = json{{"csv", csv}, {"has_header", false}, {"config", {{"budget", 40}}}}.dump();
  REQUIRE(cellsift_session_create(req.c_str(), &h.s) == CELLSIFT_OK);
  char* out = nullptr;
  REQUIRE(cellsift_session_status(h.s, &out) == CELLSIFT_OK);
  const auto status = json::parse(take(out));
  CHECK(status["schema"] == json::array({"col_0", "col_1"}));
  CHECK(status["n_rows"] == 30);
}

TEST_CASE("save and restore continue identically") {
  Fixture f;
  Handle full, part;
  REQUIRE(cellsift_session_create(f.request().c_str(), &full.s) == CELLSIFT_OK);
  REQUIRE(cellsift_session_create(f.request().c_str(), &part.s) == CELLSIFT_OK);
  REQUIRE(cellsift_session_run_oracle(full.s) == CELLSIFT_OK);
  for (int i = 0; i < 9; ++i) step(part.s);
  const auto path = f.dir.file("snap.json");
  REQUIRE(cellsift_session_save(part.s, path.c_str()) == CELLSIFT_OK);

  Handle resumed;
  REQUIRE(cellsift_session_restore(path.c_str(), f.request().c_str(), &resumed.s) == CELLSIFT_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(cellsift_session_batch(part.s, &a) == CELLSIFT_OK);
  REQUIRE(cellsift_session_batch(resumed.s, &b) == CELLSIFT_OK);
  CHECK(take(a) == take(b));
  REQUIRE(cellsift_session_run_oracle(resumed.s) == CELLSIFT_OK);
  REQUIRE(cellsift_session_report(full.s, &a) == CELLSIFT_OK);
  REQUIRE(cellsift_session_report(resumed.s, &b) == CELLSIFT_OK);
  CHECK(take(a) == take(b));

  // a different config is refused
  cellsift_session* s = nullptr;
  CHECK(cellsift_session_restore(path.c_str(), f.request({{"budget", 121}}).c_str(), &s) == CELLSIFT_E_CONFIG);
  CHECK(s == nullptr);
  testing::spit(f.dir.file("junk.json"), "{");
  CHECK(cellsift_session_restore(f.dir.file("junk.json").c_str(), f.request().c_str(), &s) == CELLSIFT_E_DECODE);
}

TEST_CASE("inject, generate and convergence helpers") {
  testing::TempDir dir("capi-inject");
  testing::spit(dir.file("clean.csv"), "a,b\nx,1\ny,2\nz,3\n");
  testing::spit(dir.file("plan.json"), R"({"seed":3,"columns":[{"column":"a","rate":1.0,"types":["typo"]}]})");
  REQUIRE(cellsift_inject(dir.file("clean.csv").c_str(), 1, dir.file("plan.json").c_str(), dir.file("d.csv").c_str(),
                          dir.file("g.csv").c_str()) == CELLSIFT_OK);
  CHECK(testing::slurp(dir.file("g.csv")) == "a,b\nx,1\ny,2\nz,3\n");
  CHECK(testing::slurp(dir.file("d.csv")) != testing::slurp(dir.file("g.csv")));

  testing::spit(dir.file("bad.json"), R"({"columns":[{"column":"nope","rate":0.5}]})");
  CHECK(cellsift_inject(dir.file("clean.csv").c_str(), 1, dir.file("bad.json").c_str(), dir.file("d.csv").c_str(),
                        dir.file("g.csv").c_str()) == CELLSIFT_E_BAD_PLAN);
  CHECK(cellsift_generate("nope", 10, 1, dir.file("d.csv").c_str(), dir.file("g.csv").c_str()) == CELLSIFT_E_CONFIG);

  testing::spit(dir.file("log.jsonl"), R"({"labels_used":10,"global":{"precision":0.5,"recall":0.5,"f1":0.5}})"
                                       "\n");
  const char* paths[] = {dir.file("log.jsonl").c_str()};
  const std::string p0 = dir.file("log.jsonl");
  paths[0] = p0.c_str();
  char* out = nullptr;
  REQUIRE(cellsift_convergence_csv(paths, 1, &out) == CELLSIFT_OK);
  CHECK(take(out).find("10,0.5,0") != std::string::npos);
  CHECK(cellsift_convergence_csv(paths, 0, &out) == CELLSIFT_E_EMPTY_LOG);
}

TEST_CASE("sessions on different threads") {
  Fixture f;
  std::string reports[2];
  std::thread workers[2];
  for (int t = 0; t < 2; ++t) {
    workers[t] = std::thread([&, t] {
      cellsift_session* s = nullptr;
      if (cellsift_session_create(f.request().c_str(), &s) != CELLSIFT_OK) return;
      cellsift_session_run_oracle(s);
      char* out = nullptr;
      if (cellsift_session_report(s, &out) == CELLSIFT_OK) reports[t] = take(out);
      cellsift_session_destroy(s);
    });
  }
  for (auto& w : workers) w.join();
  CHECK_FALSE(reports[0].empty());
  CHECK(reports[0] == reports[1]);
}
