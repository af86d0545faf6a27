#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <unistd.h>

#include "cellsift/active_learner.hpp"
#include "cellsift/benchmarks.hpp"
#include "cellsift/error.hpp"
#include "oracles.hpp"
#include "cellsift/snapshot.hpp"
#include "support.hpp"

using namespace cellsift;
using testing::column_table;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

SessionConfig small_config(Strategy s = Strategy::MinCertainty, std::size_t budget = 160) {
  SessionConfig c;
  c.strategy = s;
  c.budget = budget;
  c.seed = 5;
  c.committee_size = 9;
  c.features.embedding_dim = 8;
  return c;
}

Session bench_session(SessionConfig config, std::uint64_t seed = 1, std::size_t rows = 300) {
  auto b = make_benchmark(Scenario::Convergence, rows, seed);
  return Session(b.injected.dirty, b.injected.truth, std::move(config));
}

// Answers batches from ground truth, recording every batch shown.
std::vector<BatchRequest> drive(Session& s, std::size_t max_batches = 1000) {
  std::vector<BatchRequest> seen;
  while (!s.finished() && seen.size() < max_batches) {
    seen.push_back(*s.pending_batch());
    s.submit(s.oracle_answers());
  }
  return seen;
}

}  // namespace

TEST_CASE("probe order alternates rare and frequent values") {
  std::vector<std::string> values(100, "ok");
  values[37] = "err";
  const auto order = probe_order(column_table(values), 0);
  REQUIRE(order.size() == 100);
  CHECK(order[0].row == 37);  // the rare end comes first
  CHECK(order[1].row == 0);   // then the most frequent value, by first occurrence
  std::set<std::size_t> rows;
  for (auto c : order) rows.insert(c.row);
  CHECK(rows.size() == 100);
}

TEST_CASE("probe order breaks frequency ties by first occurrence") {
  const auto order = probe_order(column_table({"b", "a", "c", "a", "c", "b", "d"}), 0);
  // d is rarest; b, a, c all twice with first rows 0, 1, 2
  CHECK(order[0].row == 6);
  CHECK(order[1].row == 0);
  CHECK(order[2].row == 5);
  CHECK(order[3].row == 1);
}

TEST_CASE("column selection: worked examples") {
  SelectorState s;
  const std::vector<char> all{1, 1, 1};
  s.strategy = Strategy::MinCertainty;
  s.mean_certainty = {0.9, 0.6, 0.8};
  CHECK(select_column(s, all, 0) == 1);

  s.strategy = Strategy::MaxPredictionChange;
  s.prediction_change = {0.05, 0.0, 0.02};
  CHECK(select_column(s, all, 0) == 0);

  s.strategy = Strategy::MaxError;
  s.cv_f1 = {0.7, 0.9, 0.4};
  CHECK(select_column(s, all, 0) == 2);

  s.strategy = Strategy::RoundRobin;
  s.round_robin_cursor = 0;
  std::vector<std::size_t> seq;
  for (int i = 0; i < 5; ++i) seq.push_back(select_column(s, all, 0));
  CHECK(seq == std::vector<std::size_t>{0, 1, 2, 0, 1});
}

TEST_CASE("ties go to the lowest index; unselectable columns are skipped") {
  SelectorState s;
  s.strategy = Strategy::MinCertainty;
  s.mean_certainty = {0.7, 0.5, 0.5};
  const std::vector<char> all{1, 1, 1};
  CHECK(select_column(s, all, 0) == 1);
  const std::vector<char> not1{1, 0, 1};
  CHECK(select_column(s, not1, 0) == 2);
  const std::vector<char> none{0, 0, 0};
  CHECK(code_of([&] { select_column(s, none, 0); }) == ErrorCode::NoSelectableColumn);
}

TEST_CASE("warm-up selections are round-robin") {
  SelectorState s;
  s.strategy = Strategy::MinCertainty;
  s.mean_certainty = {0.9, 0.9, 0.1};
  s.warmup_remaining = 2;
  const std::vector<char> all{1, 1, 1};
  CHECK(select_column(s, all, 0) == 0);
  CHECK(select_column(s, all, 0) == 1);
  CHECK(select_column(s, all, 0) == 2);
  CHECK(select_column(s, all, 0) == 2);
}

TEST_CASE("MC and MPC match hand computation on 200 random instances") {
  const auto r = oracles::selection_suite(23);
  INFO(r.first_failure);
  CHECK(r.instances == 200);
  CHECK(r.failures == 0);
}

TEST_CASE("round robin visits every selectable column once per pass") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng() % 7;
    std::vector<char> selectable(m);
    for (auto& s : selectable) s = rng() % 3 != 0;
    selectable[0] = 1;
    const auto n_sel = static_cast<std::size_t>(std::count(selectable.begin(), selectable.end(), 1));
    SelectorState s;
    s.strategy = Strategy::RoundRobin;
    s.round_robin_cursor = rng() % m;
    std::multiset<std::size_t> seen;
    for (std::size_t i = 0; i < n_sel; ++i) seen.insert(select_column(s, selectable, 0));
    for (std::size_t j = 0; j < m; ++j) REQUIRE(seen.count(j) == (selectable[j] ? 1u : 0u));
  }
}

TEST_CASE("random selection stays among selectable columns and follows the draw") {
  SelectorState s;
  s.strategy = Strategy::Random;
  const std::vector<char> sel{0, 1, 0, 1, 1};
  std::set<std::size_t> seen;
  for (std::uint64_t d = 0; d < 100; ++d) {
    const auto j = select_column(s, sel, d);
    REQUIRE(sel[j]);
    REQUIRE(select_column(s, sel, d) == j);
    seen.insert(j);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("batch: distinct values first, row order breaks ties") {
  const auto t = column_table({"a", "a", "b", "c"});
  LabelStore store(4, 1);
  const std::vector<double> dis(4, 0.5), cert(4, 0.7);
  const auto b = generate_batch(0, dis, cert, store, 3, t);
  std::vector<std::size_t> rows;
  for (auto c : b.cells) rows.push_back(c.row);
  CHECK(rows == std::vector<std::size_t>{0, 2, 3});
}

TEST_CASE("batch size is capped by the unlabeled count") {
  const auto t = column_table({"a", "b", "c", "d", "e", "f"});
  LabelStore store(6, 1);
  store.submit(std::vector<Label>{{{0, 0}}, {{1, 0}}});
  const std::vector<double> dis(6, 0.0), cert(6, 1.0);
  CHECK(generate_batch(0, dis, cert, store, 10, t).cells.size() == 4);
}

TEST_CASE("duplicates fill the batch when distinct values run out") {
  const auto t = column_table({"x", "x", "x", "x", "x"});
  LabelStore store(5, 1);
  const std::vector<double> dis{0.1, 0.9, 0.5, 0.5, 0.0}, cert{0.9, 0.6, 0.8, 0.7, 0.9};
  const auto b = generate_batch(0, dis, cert, store, 3, t);
  std::vector<std::size_t> rows;
  for (auto c : b.cells) rows.push_back(c.row);
  // by disagreement, then lower certainty
  CHECK(rows == std::vector<std::size_t>{1, 3, 2});
}

TEST_CASE("exhausted column") {
  const auto t = column_table({"a"});
  LabelStore store(1, 1);
  store.submit(std::vector<Label>{{{0, 0}}});
  const std::vector<double> v(1, 0.0);
  CHECK(code_of([&] { generate_batch(0, v, v, store, 3, t); }) == ErrorCode::ColumnExhausted);
}

TEST_CASE("config validation") {
  SessionConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
  CHECK(code_of([] { SessionConfig::from_json(R"({"strategy":"greedy"})"); }) == ErrorCode::Config);
  CHECK(code_of([] { SessionConfig::from_json(R"({"cv_folds":1})"); }) == ErrorCode::Config);
  CHECK(code_of([] { SessionConfig::from_json("[1]"); }) == ErrorCode::Config);
  const auto parsed = SessionConfig::from_json(R"({"budget":500,"strategy":"mpc","features":{"words":true}})");
  CHECK(parsed.budget == 500);
  CHECK(parsed.strategy == Strategy::MaxPredictionChange);
  CHECK(parsed.features.use_words);
  CHECK(SessionConfig::from_json(parsed.to_json()) == parsed);
  CHECK(parsed.hash() == SessionConfig::from_json(parsed.to_json()).hash());
  CHECK(parse_strategy("min_certainty") == Strategy::MinCertainty);
}

TEST_CASE("budget below the initialization minimum") {
  auto b = make_benchmark(Scenario::Convergence, 100, 1);
  CHECK(initialization_minimum(b.injected.dirty) == 32);
  auto c = small_config();
  c.budget = 31;
  CHECK(code_of([&] { Session(b.injected.dirty, b.injected.truth, c); }) == ErrorCode::BudgetExhausted);
  c.budget = 32;
  CHECK_NOTHROW(Session(b.injected.dirty, b.injected.truth, c));
}

TEST_CASE("clean column goes degenerate with a constant correct model") {
  std::vector<std::vector<std::string>> rows, clean_rows;
  for (int i = 0; i < 60; ++i) {
    const std::string v = "v" + std::to_string(i % 7);
    rows.push_back({"same" + std::to_string(i % 3), i % 10 == 0 ? v + "#" : v});
    clean_rows.push_back({"same" + std::to_string(i % 3), v});
  }
  const Table dirty({"clean", "noisy"}, rows);
  auto truth = attach_ground_truth(dirty, Table({"clean", "noisy"}, clean_rows));
  auto c = small_config(Strategy::MinCertainty, 80);
  Session s(dirty, truth, c);
  // initialization probes for the clean column stop at the cap
  std::size_t probed_clean = 0;
  while (s.phase() == Phase::Initialization) {
    const auto* b = s.pending_batch();
    REQUIRE(b->initialization);
    if (b->column == 0) probed_clean += b->cells.size();
    s.submit(s.oracle_answers());
  }
  CHECK(probed_clean == 20);
  CHECK(s.models()[0].degenerate);
  REQUIRE(s.models()[0].committee.is_constant());
  CHECK(*s.models()[0].committee.constant_probability() == kSingleClassCorrect);
  CHECK_FALSE(s.models()[1].degenerate);
  // never selected afterwards
  const auto batches = drive(s);
  for (const auto& b : batches) CHECK(b.column == 1);
  for (auto cell : s.final_predictions()) CHECK(cell.col == 1);
}

TEST_CASE("session state machine invariants") {
  auto s = bench_session(small_config());
  std::set<CellRef> queried;
  std::size_t shown = 0;
  while (!s.finished()) {
    const auto batch = *s.pending_batch();
    const auto before = s.budget_remaining();
    for (auto c : batch.cells) REQUIRE(queried.insert(c).second);
    shown += batch.cells.size();
    const auto summary = s.submit(s.oracle_answers());
    REQUIRE(s.budget_remaining() == before - batch.cells.size());
    REQUIRE(summary.labels_used == s.labels_used());
    REQUIRE(s.labels().counters_consistent());
    if (!batch.initialization) {
      const auto col = batch.column;
      REQUIRE(summary.column == col);
      const auto& m = s.models()[col];
      // the block carries the column's latest probabilities
      const auto block = s.error_block().column(col);
      REQUIRE(std::equal(block.begin(), block.end(), m.probabilities.begin(), m.probabilities.end()));
      // prediction change is the changed fraction against the previous predictions
      std::size_t changed = 0;
      for (std::size_t i = 0; i < m.predictions.size(); ++i) changed += m.predictions[i] != m.previous_predictions[i];
      REQUIRE(m.prediction_change == doctest::Approx(double(changed) / double(m.predictions.size())));
      REQUIRE(s.selector().prediction_change[col] == m.prediction_change);
    }
  }
  CHECK(shown == s.labels_used());
  CHECK(s.labels_used() <= s.config().budget);
  CHECK(s.budget_remaining() == s.config().budget - s.labels_used());
  CHECK(s.pending_batch() == nullptr);
  CHECK(code_of([&] { s.submit(std::vector<Label>{}); }) == ErrorCode::LabelMismatch);
  // exact accounting: initialization labels plus the active batches
  std::size_t init_labels = 0, active = 0;
  for (const auto& h : s.history()) {
    if (h.phase != Phase::Initialization && h.column) ++active;
    if (h.phase == Phase::Initialization) init_labels = h.labels_used;
  }
  (void)init_labels;
  CHECK(active == static_cast<std::size_t>(s.iteration()));
}

TEST_CASE("labels that do not match the pending batch") {
  auto s = bench_session(small_config());
  const auto answers = s.oracle_answers();
  auto wrong = answers;
  wrong[0].cell.row = (wrong[0].cell.row + 1) % s.table().n_rows();
  while (std::any_of(answers.begin(), answers.end(), [&](const Label& l) { return l.cell == wrong[0].cell; })) {
    wrong[0].cell.row = (wrong[0].cell.row + 1) % s.table().n_rows();
  }
  CHECK(code_of([&] { s.submit(wrong); }) == ErrorCode::LabelMismatch);
  auto missing = answers;
  missing.pop_back();
  if (!missing.empty()) CHECK(code_of([&] { s.submit(missing); }) == ErrorCode::LabelMismatch);
  auto doubled = answers;
  doubled.push_back(answers[0]);
  CHECK(code_of([&] { s.submit(doubled); }) == ErrorCode::LabelMismatch);
  CHECK(s.labels_used() == 0);
  CHECK_NOTHROW(s.submit(answers));
  // replaying the same answers is rejected
  CHECK(code_of([&] { s.submit(answers); }) == ErrorCode::LabelMismatch);
}

TEST_CASE("oracle answers need ground truth") {
  auto b = make_benchmark(Scenario::Convergence, 100, 1);
  Session s(b.injected.dirty, std::nullopt, small_config());
  CHECK(code_of([&] { s.oracle_answers(); }) == ErrorCode::Config);
  CHECK_FALSE(s.current_score());
}

TEST_CASE("determinism: same inputs, same batches and predictions") {
  for (auto strategy : {Strategy::MinCertainty, Strategy::Random, Strategy::MaxPredictionChange}) {
    auto a = bench_session(small_config(strategy), 2);
    auto b = bench_session(small_config(strategy), 2);
    const auto ba = drive(a), bb = drive(b);
    CHECK(ba == bb);
    CHECK(a.final_predictions() == b.final_predictions());
    CHECK(snapshot_to_json(a.snapshot()) == snapshot_to_json(b.snapshot()));
  }
}

TEST_CASE("replay: snapshot mid-run, restore, continue") {
  for (auto strategy : {Strategy::MinCertainty, Strategy::Random, Strategy::MaxError}) {
    auto full = bench_session(small_config(strategy), 3);
    const auto all = drive(full);

    auto part = bench_session(small_config(strategy), 3);
    const std::size_t cut = all.size() / 2;
    auto first = drive(part, cut);
    const auto text = snapshot_to_json(part.snapshot());
    auto b = make_benchmark(Scenario::Convergence, 300, 3);
    auto resumed = Session::restore(snapshot_from_json(text), b.injected.dirty, b.injected.truth);
    const auto rest = drive(resumed);
    first.insert(first.end(), rest.begin(), rest.end());
    CHECK(first == all);
    CHECK(resumed.final_predictions() == full.final_predictions());
    CHECK(resumed.history() == full.history());
  }
}

TEST_CASE("snapshot round trip and failure modes") {
  auto s = bench_session(small_config(), 4);
  drive(s, 12);
  const auto snap = s.snapshot();
  CHECK(snapshot_from_json(snapshot_to_json(snap)) == snap);

  testing::TempDir dir("snap");
  save_session(snap, dir.file("s.json"));
  CHECK(load_session(dir.file("s.json")) == snap);

  auto text = snapshot_to_json(snap);
  CHECK(code_of([&] { snapshot_from_json(text.substr(0, text.size() / 2)); }) == ErrorCode::Decode);
  CHECK(code_of([&] { snapshot_from_json("{}"); }) == ErrorCode::Decode);
  testing::spit(dir.file("bad.json"), "garbage");
  CHECK(code_of([&] { load_session(dir.file("bad.json")); }) == ErrorCode::Decode);
  CHECK(code_of([&] { load_session(dir.file("missing.json")); }) == ErrorCode::Io);

  auto future = snap;
  future.format_version = kSnapshotFormatVersion + 1;
  CHECK(code_of([&] { snapshot_from_json(snapshot_to_json(future)); }) == ErrorCode::VersionMismatch);

  auto other = make_benchmark(Scenario::Convergence, 300, 5);
  CHECK(code_of([&] { Session::restore(snap, other.injected.dirty, std::nullopt); }) == ErrorCode::ShapeMismatch);
  auto tampered = snap;
  tampered.config.budget += 1;
  auto same = make_benchmark(Scenario::Convergence, 300, 4);
  CHECK(code_of([&] { Session::restore(tampered, same.injected.dirty, std::nullopt); }) == ErrorCode::Decode);
}

TEST_CASE("final predictions: labels win, threshold is inclusive") {
  auto s = bench_session(small_config(), 6);
  drive(s, 14);
  auto snap = s.snapshot();
  // pick an unlabeled cell of a trained column and force p = 0.5
  std::size_t col = 0;
  while (!snap.models[col].trained || snap.models[col].degenerate) ++col;
  std::size_t row = 0;
  while (s.labels().contains({row, col})) ++row;
  snap.models[col].probabilities[row] = 0.5;
  // and a labeled erroneous cell with a low model probability
  const auto labels = s.labels().labels();
  const auto err = std::find_if(labels.begin(), labels.end(), [](const Label& l) { return l.value == LabelValue::Erroneous; });
  REQUIRE(err != labels.end());
  snap.models[err->cell.col].probabilities[err->cell.row] = 0.2;
  const auto correct = std::find_if(labels.begin(), labels.end(), [](const Label& l) { return l.value == LabelValue::Correct; });
  snap.models[correct->cell.col].probabilities[correct->cell.row] = 0.9;

  auto b = make_benchmark(Scenario::Convergence, 300, 6);
  const auto r = Session::restore(snapshot_from_json(snapshot_to_json(snap)), b.injected.dirty, b.injected.truth);
  const auto pred = r.final_predictions();
  auto has = [&](CellRef c) { return std::find(pred.begin(), pred.end(), c) != pred.end(); };
  CHECK(has({row, col}));
  CHECK(has(err->cell));
  CHECK_FALSE(has(correct->cell));
  CHECK(std::is_sorted(pred.begin(), pred.end()));
}

TEST_CASE("constant-correct models and no erroneous labels predict nothing") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({"a" + std::to_string(i % 4), "b" + std::to_string(i % 5)});
  const Table t({"x", "y"}, rows);
  Session s(t, attach_ground_truth(t, t), small_config(Strategy::MinCertainty, 60));
  drive(s);
  CHECK(s.finished());
  CHECK(s.final_predictions().empty());
  // error-free table, empty prediction: P = R = 1
  CHECK(s.current_score()->precision == 1.0);
  CHECK(s.current_score()->recall == 1.0);
}

TEST_CASE("round-robin sessions cycle through the columns") {
  auto s = bench_session(small_config(Strategy::RoundRobin, 200), 7);
  const auto batches = drive(s);
  std::vector<std::size_t> cols;
  for (const auto& b : batches) {
    if (!b.initialization) cols.push_back(b.column);
  }
  std::set<std::size_t> selectable;
  for (const auto& m : s.models()) {
    if (!m.degenerate) selectable.insert(m.column);
  }
  const auto m = selectable.size();
  REQUIRE(cols.size() >= m);
  for (std::size_t start = 0; start + m <= cols.size(); start += m) {
    std::set<std::size_t> window(cols.begin() + static_cast<long>(start), cols.begin() + static_cast<long>(start + m));
    CHECK(window == selectable);
  }
}

TEST_CASE("explanations follow the surrogate") {
  auto s = bench_session(small_config(), 8);
  drive(s, 20);
  std::size_t col = 0;
  while (!s.models()[col].trained || s.models()[col].degenerate) ++col;
  const auto e = s.explain({3, col});
  CHECK(e.path.size() <= kSurrogateDepth);
  for (const auto& step : e.path) CHECK((step.comparison == "<=" || step.comparison == ">"));
  CHECK(code_of([&] { s.explain({s.table().n_rows(), 0}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("summaries and convergence points") {
  auto s = bench_session(small_config(), 9);
  drive(s);
  const auto curve = s.convergence();
  REQUIRE_FALSE(curve.empty());
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].labels_used > curve[i - 1].labels_used);
  CHECK(curve.back().labels_used == s.labels_used());
  const auto cols = s.column_summaries();
  CHECK(cols.size() == s.table().n_cols());
  std::size_t labels = 0;
  for (const auto& c : cols) labels += c.labels;
  CHECK(labels == s.labels_used());
}
