#include "cellsift/active_learner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cellsift/error.hpp"
#include "cellsift/random.hpp"
#include "cellsift/snapshot.hpp"
#include "json.hpp"

namespace cellsift {

namespace {

// Sub-seed purposes.
constexpr std::uint64_t kEmbeddingStream = 1;
constexpr std::uint64_t kGridStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kRandomColumnStream = 4;

bool metric_strategy(Strategy s) {
  return s == Strategy::MinCertainty || s == Strategy::MaxError || s == Strategy::MaxPredictionChange;
}

}  // namespace

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Random: return "ra";
    case Strategy::RoundRobin: return "rr";
    case Strategy::MinCertainty: return "mc";
    case Strategy::MaxError: return "me";
    case Strategy::MaxPredictionChange: return "mpc";
  }
  return "mc";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "ra" || s == "random") return Strategy::Random;
  if (s == "rr" || s == "round_robin") return Strategy::RoundRobin;
  if (s == "mc" || s == "min_certainty") return Strategy::MinCertainty;
  if (s == "me" || s == "max_error") return Strategy::MaxError;
  if (s == "mpc" || s == "max_prediction_change") return Strategy::MaxPredictionChange;
  throw Error(ErrorCode::Config, "unknown strategy '" + std::string(s) + "'");
}

const char* to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Initialization: return "initialization";
    case Phase::Active: return "active";
    case Phase::Finished: return "finished";
  }
  return "finished";
}

void SessionConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorCode::Config, "batch size must be >= 1");
  if (features.ngram_order == 0) throw Error(ErrorCode::Config, "n-gram order must be >= 1");
  if (features.use_embedding && features.embedding_dim == 0) {
    throw Error(ErrorCode::Config, "embedding dimension must be >= 1 when the embedding block is enabled");
  }
  if (committee_size == 0) throw Error(ErrorCode::Config, "committee size must be >= 1");
  if (grid.empty()) throw Error(ErrorCode::Config, "hyperparameter grid is empty");
  for (const auto& h : grid) {
    if (h.max_depth == 0 || h.min_leaf == 0) throw Error(ErrorCode::Config, "grid entries need max_depth, min_leaf >= 1");
  }
  if (cv_folds < 2) throw Error(ErrorCode::Config, "cross-validation needs at least 2 folds");
  if (init_probe_cap < 4) throw Error(ErrorCode::Config, "initialization probe cap must be >= 4");
}

std::string SessionConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["budget"] = budget;
  j["strategy"] = cellsift::to_string(strategy);
  j["seed"] = seed;
  j["cv_folds"] = cv_folds;
  j["committee_size"] = committee_size;
  auto& g = j["grid"] = nlohmann::ordered_json::array();
  for (const auto& h : grid) g.push_back({{"max_depth", h.max_depth}, {"min_leaf", h.min_leaf}});
  j["init_probe_cap"] = init_probe_cap;
  auto& f = j["features"];
  f["ngram_order"] = features.ngram_order;
  f["ngrams"] = features.use_ngrams;
  f["words"] = features.use_words;
  f["metadata"] = features.use_metadata;
  f["embedding"] = features.use_embedding;
  f["embedding_dim"] = features.embedding_dim;
  f["error_correlation"] = features.use_error_correlation;
  f["vocabulary_cap"] = features.vocabulary_cap;
  return j.dump();
}

SessionConfig SessionConfig::from_json(std::string_view text) {
  SessionConfig c;
  try {
    auto j = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::Config, "session config must be a JSON object");
    c.batch_size = j.value("batch_size", c.batch_size);
    c.budget = j.value("budget", c.budget);
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.committee_size = j.value("committee_size", c.committee_size);
    c.init_probe_cap = j.value("init_probe_cap", c.init_probe_cap);
    if (j.contains("grid")) {
      c.grid.clear();
      for (const auto& h : j.at("grid")) {
        c.grid.push_back({h.at("max_depth").get<std::size_t>(), h.at("min_leaf").get<std::size_t>()});
      }
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      auto& fc = c.features;
      fc.ngram_order = f.value("ngram_order", fc.ngram_order);
      fc.use_ngrams = f.value("ngrams", fc.use_ngrams);
      fc.use_words = f.value("words", fc.use_words);
      fc.use_metadata = f.value("metadata", fc.use_metadata);
      fc.use_embedding = f.value("embedding", fc.use_embedding);
      fc.embedding_dim = f.value("embedding_dim", fc.embedding_dim);
      fc.use_error_correlation = f.value("error_correlation", fc.use_error_correlation);
      fc.vocabulary_cap = f.value("vocabulary_cap", fc.vocabulary_cap);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("session config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t SessionConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<CellRef> probe_order(const Table& table, std::size_t col) {
  const std::size_t n = table.n_rows();
  std::unordered_map<std::string_view, std::pair<std::size_t, std::size_t>> stats;  // count, first row
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = stats.try_emplace(table.at(i, col), 0, i);
    ++it->second.first;
  }
  std::vector<std::size_t> rare(n), frequent;
  std::iota(rare.begin(), rare.end(), 0);
  auto key = [&](std::size_t row) { return stats.at(table.at(row, col)); };
  std::stable_sort(rare.begin(), rare.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a), kb = key(b);
    if (ka.first != kb.first) return ka.first < kb.first;
    return ka.second < kb.second;
  });
  frequent.resize(n);
  std::iota(frequent.begin(), frequent.end(), 0);
  std::stable_sort(frequent.begin(), frequent.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a), kb = key(b);
    if (ka.first != kb.first) return ka.first > kb.first;
    return ka.second < kb.second;
  });

  std::vector<CellRef> out;
  out.reserve(n);
  std::vector<char> used(n, 0);
  std::size_t r = 0, f = 0;
  bool take_rare = true;
  while (out.size() < n) {
    auto& idx = take_rare ? r : f;
    const auto& order = take_rare ? rare : frequent;
    while (idx < n && used[order[idx]]) ++idx;
    if (idx < n) {
      used[order[idx]] = 1;
      out.push_back({order[idx], col});
    }
    take_rare = !take_rare;
  }
  return out;
}

std::size_t initialization_minimum(const Table& table) {
  return table.n_cols() * std::min<std::size_t>(4, table.n_rows());
}

std::size_t select_column(SelectorState& state, std::span<const char> selectable, std::uint64_t draw) {
  const std::size_t m = selectable.size();
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < m; ++j) {
    if (selectable[j]) candidates.push_back(j);
  }
  if (candidates.empty()) throw Error(ErrorCode::NoSelectableColumn, "every column is fully labeled or degenerate");

  auto round_robin = [&] {
    for (std::size_t step = 0; step < m; ++step) {
      const std::size_t j = (state.round_robin_cursor + step) % m;
      if (selectable[j]) {
        state.round_robin_cursor = (j + 1) % m;
        return j;
      }
    }
    return candidates.front();
  };

  if (state.strategy == Strategy::RoundRobin) return round_robin();
  if (state.strategy == Strategy::Random) {
    Rng rng(draw);
    return candidates[rng.below(candidates.size())];
  }
  if (state.warmup_remaining > 0) {
    --state.warmup_remaining;
    return round_robin();
  }

  auto metric = [&](std::size_t j) {
    switch (state.strategy) {
      case Strategy::MinCertainty: return state.mean_certainty.at(j);
      case Strategy::MaxError: return state.cv_f1.at(j);
      default: return -state.prediction_change.at(j);  // argmax as argmin of the negation
    }
  };
  std::size_t best = candidates.front();
  for (auto j : candidates) {
    if (metric(j) < metric(best)) best = j;
  }
  return best;
}

BatchRequest generate_batch(std::size_t col, std::span<const double> disagreement, std::span<const double> certainty,
                            const LabelStore& store, std::size_t k, const Table& table) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    if (!store.contains({i, col})) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::ColumnExhausted, "column " + std::to_string(col) + " has no unlabeled cells");
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (disagreement[a] != disagreement[b]) return disagreement[a] > disagreement[b];
    if (certainty[a] != certainty[b]) return certainty[a] < certainty[b];
    return a < b;
  });

  const std::size_t size = std::min(k, rows.size());
  BatchRequest batch;
  batch.column = col;
  std::unordered_set<std::string_view> values;
  std::vector<std::size_t> skipped;
  std::vector<std::size_t> chosen;
  for (auto row : rows) {
    if (chosen.size() == size) break;
    if (values.insert(table.at(row, col)).second) {
      chosen.push_back(row);
    } else {
      skipped.push_back(row);
    }
  }
  for (std::size_t s = 0; chosen.size() < size && s < skipped.size(); ++s) chosen.push_back(skipped[s]);
  for (auto row : chosen) {
    batch.cells.push_back({row, col});
    batch.disagreement.push_back(disagreement[row]);
    batch.certainty.push_back(certainty[row]);
  }
  return batch;
}

Session::Session(Table table, std::optional<GroundTruth> truth, SessionConfig config)
    : table_(std::move(table)), truth_(std::move(truth)), config_(std::move(config)) {
  config_.validate();
  if (truth_ && (truth_->table().n_rows() != table_.n_rows() || truth_->table().n_cols() != table_.n_cols())) {
    throw Error(ErrorCode::ShapeMismatch, "ground truth does not match the table shape");
  }
  const std::size_t minimum = initialization_minimum(table_);
  if (config_.budget < minimum) {
    throw Error(ErrorCode::BudgetExhausted, "label budget " + std::to_string(config_.budget) +
                                                " is below the initialization minimum of " + std::to_string(minimum) +
                                                " (two erroneous and two correct cells per column)");
  }
  const std::size_t m = table_.n_cols();
  store_ = LabelStore(table_.n_rows(), m);
  block_ = ErrorProbabilityBlock(table_.n_rows(), m);
  models_.resize(m);
  for (std::size_t j = 0; j < m; ++j) models_[j].column = j;
  selector_.strategy = config_.strategy;
  selector_.seed = config_.seed;
  selector_.mean_certainty.assign(m, 1.0);
  selector_.cv_f1.assign(m, 0.0);
  selector_.prediction_change.assign(m, 0.0);
  init_.presented.assign(m, 0);
  init_.cursor.assign(m, 0);
  build_features();
  plan_next_batch();
}

void Session::build_features() {
  const std::size_t m = table_.n_cols();
  if (config_.features.use_embedding) {
    EmbeddingParams params;
    params.dim = config_.features.embedding_dim;
    params.seed = derive_seed(config_.seed, {kEmbeddingStream});
    embedding_ = train_embedding(table_, params);
  }
  features_ = assemble(table_, config_.features, embedding_ ? &*embedding_ : nullptr);
  probe_orders_.clear();
  for (std::size_t j = 0; j < m; ++j) probe_orders_.push_back(probe_order(table_, j));
}

std::size_t Session::unlabeled_count(std::size_t col) const {
  return table_.n_rows() - store_.counts(col).total();
}

std::optional<BatchRequest> Session::next_initialization_batch() {
  const std::size_t m = table_.n_cols();
  while (init_.current_column < m) {
    const std::size_t col = init_.current_column;
    const auto& counts = store_.counts(col);
    const std::size_t need = (counts.erroneous < 2 ? 2 - counts.erroneous : 0) +
                             (counts.correct < 2 ? 2 - counts.correct : 0);
    const std::size_t cap_left = config_.init_probe_cap - std::min(config_.init_probe_cap, init_.presented[col]);
    const auto& order = probe_orders_[col];
    auto& cursor = init_.cursor[col];
    while (cursor < order.size() && store_.contains(order[cursor])) ++cursor;
    if (need == 0 || cap_left == 0 || cursor >= order.size()) {
      ++init_.current_column;
      continue;
    }
    BatchRequest batch;
    batch.column = col;
    batch.initialization = true;
    const std::size_t size = std::min({need, cap_left, budget_remaining()});
    for (std::size_t pos = cursor; pos < order.size() && batch.cells.size() < size; ++pos) {
      if (store_.contains(order[pos])) continue;
      batch.cells.push_back(order[pos]);
      batch.disagreement.push_back(0.0);
      batch.certainty.push_back(0.0);
    }
    return batch;
  }
  return std::nullopt;
}

void Session::plan_next_batch() {
  pending_.reset();
  if (phase_ == Phase::Finished) return;
  if (phase_ == Phase::Initialization) {
    if (budget_remaining() > 0) {
      if (auto batch = next_initialization_batch()) {
        pending_ = std::move(batch);
        return;
      }
    }
    finish_initialization();
  }
  if (budget_remaining() == 0) {
    phase_ = Phase::Finished;
    return;
  }
  const auto selectable = selectable_columns();
  if (std::none_of(selectable.begin(), selectable.end(), [](char c) { return c != 0; })) {
    phase_ = Phase::Finished;
    return;
  }
  const auto draw = derive_seed(config_.seed, {kRandomColumnStream, static_cast<std::uint64_t>(iteration_ + 1)});
  const std::size_t col = select_column(selector_, selectable, draw);
  const auto& model = models_[col];
  const auto cert = model.certainties();
  pending_ = generate_batch(col, model.disagreement, cert, store_,
                            std::min(config_.batch_size, budget_remaining()), table_);
}

void Session::set_constant_model(std::size_t col, double p) {
  auto& model = models_[col];
  const std::size_t n = table_.n_rows();
  model.committee = Committee::constant(p, features_.feature_length());
  model.surrogate = DecisionTree();
  model.cv = CvReport{0, {}, 0.0, true};
  model.probabilities.assign(n, p);
  model.disagreement.assign(n, 0.0);
  model.previous_predictions = model.predictions.empty() ? std::vector<char>(n, 0) : model.predictions;
  model.predictions.assign(n, p >= 0.5 ? 1 : 0);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < n; ++i) changed += model.predictions[i] != model.previous_predictions[i];
  model.prediction_change = static_cast<double>(changed) / static_cast<double>(n);
  model.mean_certainty = std::max(p, 1.0 - p);
  model.trained = true;
  model.last_trained_iteration = iteration_;
  block_.refresh(col, model.probabilities);
  selector_.mean_certainty[col] = model.mean_certainty;
  selector_.cv_f1[col] = 0.0;
  selector_.prediction_change[col] = model.prediction_change;
}

void Session::finish_initialization() {
  for (std::size_t j = 0; j < table_.n_cols(); ++j) {
    const auto& counts = store_.counts(j);
    if (counts.erroneous == 0 || counts.correct == 0) {
      models_[j].degenerate = true;
      if (counts.total() > 0) set_constant_model(j, counts.erroneous > 0 ? kSingleClassErroneous : kSingleClassCorrect);
      continue;
    }
    retrain(j);
  }
  phase_ = Phase::Active;
  const auto selectable = selectable_columns();
  selector_.warmup_remaining =
      metric_strategy(config_.strategy) ? static_cast<std::size_t>(std::count(selectable.begin(), selectable.end(), 1)) : 0;
  history_.push_back(summarize(std::nullopt));
}

void Session::retrain(std::size_t col) {
  auto& model = models_[col];
  const std::size_t n = table_.n_rows();
  const auto labeled = store_.column_labels(col);
  std::vector<std::size_t> rows;
  std::vector<int> y;
  for (const auto& l : labeled) {
    rows.push_back(l.cell.row);
    y.push_back(l.value == LabelValue::Erroneous ? 1 : 0);
  }
  const auto it = static_cast<std::uint64_t>(iteration_);
  const Matrix train_x = features_.column_matrix(col, rows, block_);

  const auto search = grid_search(train_x, y, config_.grid, config_.cv_folds,
                                  derive_seed(config_.seed, {kGridStream, col, it}), config_.committee_size);
  model.hyperparams = search.best;
  model.cv = search.report;
  model.committee = Committee::train(train_x, y, search.best, derive_seed(config_.seed, {kTrainStream, col, it}),
                                     config_.committee_size);
  model.surrogate = train_surrogate(train_x, y);

  const Matrix all_x = features_.column_matrix(col, block_);
  model.probabilities = model.committee.predict_proba(all_x);
  model.disagreement = model.committee.disagreement(all_x);
  model.previous_predictions = model.predictions.empty() ? std::vector<char>(n, 0) : model.predictions;
  model.predictions.resize(n);
  std::size_t changed = 0;
  double cert_sum = 0.0;
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = model.probabilities[i];
    model.predictions[i] = p >= 0.5 ? 1 : 0;
    changed += model.predictions[i] != model.previous_predictions[i];
    if (!store_.contains({i, col})) {
      cert_sum += std::max(p, 1.0 - p);
      ++unlabeled;
    }
  }
  model.prediction_change = static_cast<double>(changed) / static_cast<double>(n);
  model.mean_certainty = unlabeled ? cert_sum / static_cast<double>(unlabeled) : 1.0;
  model.trained = true;
  model.last_trained_iteration = iteration_;
  block_.refresh(col, model.probabilities);

  selector_.mean_certainty[col] = model.mean_certainty;
  selector_.cv_f1[col] = model.cv.mean_f1;
  selector_.prediction_change[col] = model.prediction_change;
}

std::vector<char> Session::selectable_columns() const {
  std::vector<char> out(table_.n_cols(), 0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = models_[j].trained && !models_[j].degenerate && unlabeled_count(j) > 0 ? 1 : 0;
  }
  return out;
}

IterationSummary Session::submit(std::span<const Label> labels) {
  if (!pending_) throw Error(ErrorCode::LabelMismatch, "no batch is pending; the session is finished");
  const auto& batch = *pending_;
  std::set<CellRef> expected(batch.cells.begin(), batch.cells.end());
  std::set<CellRef> got;
  for (const auto& l : labels) {
    if (!expected.contains(l.cell) || !got.insert(l.cell).second) {
      throw Error(ErrorCode::LabelMismatch, "label for cell (" + std::to_string(l.cell.row) + ", " +
                                                std::to_string(l.cell.col) + ") does not match the pending batch");
    }
  }
  if (got.size() != expected.size()) {
    throw Error(ErrorCode::LabelMismatch, "expected " + std::to_string(expected.size()) + " labels, got " +
                                              std::to_string(got.size()));
  }

  const bool initialization = batch.initialization;
  const std::size_t col = batch.column;
  if (!initialization) ++iteration_;
  std::vector<Label> stamped(labels.begin(), labels.end());
  for (auto& l : stamped) l.iteration = iteration_;
  store_.submit(stamped);

  if (initialization) {
    init_.presented[col] += stamped.size();
    const std::size_t before = history_.size();
    plan_next_batch();
    // Initialization finished inside plan_next_batch: report that summary.
    if (history_.size() > before) return history_.back();
    return summarize(std::nullopt);
  }

  retrain(col);
  history_.push_back(summarize(col));
  plan_next_batch();
  auto summary = history_.back();
  summary.phase = phase_ == Phase::Finished ? Phase::Finished : summary.phase;
  summary.budget_remaining = budget_remaining();
  return summary;
}

std::vector<Label> Session::oracle_answers() const {
  if (!truth_) throw Error(ErrorCode::Config, "oracle labeling requires ground truth");
  std::vector<Label> out;
  if (!pending_) return out;
  for (const auto& cell : pending_->cells) out.push_back(oracle_label(table_, *truth_, cell, iteration_));
  return out;
}

void Session::run_oracle() {
  while (pending_) submit(oracle_answers());
}

double Session::probability(CellRef cell) const {
  table_.check_bounds(cell);
  const auto& model = models_[cell.col];
  return model.probabilities.empty() ? 0.0 : model.probabilities[cell.row];
}

std::vector<CellRef> Session::final_predictions() const {
  std::vector<CellRef> out;
  for (std::size_t i = 0; i < table_.n_rows(); ++i) {
    for (std::size_t j = 0; j < table_.n_cols(); ++j) {
      if (const Label* l = store_.find({i, j})) {
        if (l->value == LabelValue::Erroneous) out.push_back({i, j});
        continue;
      }
      const auto& model = models_[j];
      if (!model.probabilities.empty() && model.probabilities[i] >= 0.5) out.push_back({i, j});
    }
  }
  return out;
}

std::optional<DetectionResult> Session::current_score() const {
  if (!truth_) return std::nullopt;
  const auto predicted = final_predictions();
  return score(predicted, *truth_, table_);
}

Explanation Session::explain(CellRef cell) const {
  table_.check_bounds(cell);
  const auto& model = models_[cell.col];
  if (model.surrogate.nodes().empty()) {
    throw Error(ErrorCode::NotTrained, "column '" + table_.column_name(cell.col) + "' has no surrogate tree yet");
  }
  const std::size_t row[] = {cell.row};
  const Matrix x = features_.column_matrix(cell.col, row, block_);
  return cellsift::explain(model.surrogate, x.row(0), features_.registry(cell.col));
}

std::vector<ColumnSummary> Session::column_summaries() const {
  std::vector<ColumnSummary> out;
  for (std::size_t j = 0; j < table_.n_cols(); ++j) {
    const auto& model = models_[j];
    ColumnSummary s;
    s.column = j;
    s.name = table_.column_name(j);
    s.labels = store_.counts(j).total();
    s.erroneous_labels = store_.counts(j).erroneous;
    s.mean_certainty = selector_.mean_certainty[j];
    s.cv_f1 = selector_.cv_f1[j];
    s.prediction_change = selector_.prediction_change[j];
    s.degenerate = model.degenerate;
    s.trained = model.trained;
    out.push_back(std::move(s));
  }
  return out;
}

IterationSummary Session::summarize(std::optional<std::size_t> column) const {
  IterationSummary s;
  s.iteration = iteration_;
  s.phase = phase_;
  s.column = column;
  s.labels_used = labels_used();
  s.budget_remaining = budget_remaining();
  s.per_column = column_summaries();
  s.global = current_score();
  return s;
}

std::vector<ConvergencePoint> Session::convergence() const {
  std::vector<ConvergencePoint> out;
  for (const auto& s : history_) {
    if (!s.global) continue;
    ConvergencePoint p{s.labels_used, s.global->precision, s.global->recall, s.global->f1};
    if (!out.empty() && out.back().labels_used == p.labels_used) {
      out.back() = p;
    } else {
      out.push_back(p);
    }
  }
  return out;
}

SessionSnapshot Session::snapshot() const {
  SessionSnapshot s;
  s.config = config_;
  s.config_hash = config_.hash();
  s.table_fingerprint = table_.fingerprint();
  s.seed = config_.seed;
  s.iteration = iteration_;
  s.phase = phase_;
  s.labels = store_.labels();
  s.init = init_;
  s.selector = selector_;
  s.pending = pending_;
  s.models = models_;
  s.block = block_;
  s.history = history_;
  return s;
}

Session Session::restore(const SessionSnapshot& snapshot, Table table, std::optional<GroundTruth> truth) {
  if (snapshot.format_version != kSnapshotFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "snapshot format version " + std::to_string(snapshot.format_version) +
                                                " is not supported");
  }
  if (snapshot.config.hash() != snapshot.config_hash) {
    throw Error(ErrorCode::Decode, "snapshot config hash does not match its config");
  }
  if (table.fingerprint() != snapshot.table_fingerprint) {
    throw Error(ErrorCode::ShapeMismatch, "the table differs from the one the snapshot was taken on");
  }
  Session s;
  s.table_ = std::move(table);
  s.truth_ = std::move(truth);
  s.config_ = snapshot.config;
  s.config_.validate();
  const std::size_t m = s.table_.n_cols();
  if (snapshot.models.size() != m || snapshot.block.n_cols() != m || snapshot.block.n_rows() != s.table_.n_rows()) {
    throw Error(ErrorCode::Decode, "snapshot shape does not match the table");
  }
  s.build_features();
  s.store_ = LabelStore(s.table_.n_rows(), m);
  const auto rejected = s.store_.submit(snapshot.labels);
  if (!rejected.empty()) throw Error(ErrorCode::Decode, "snapshot contains duplicate labels");
  s.block_ = snapshot.block;
  s.models_ = snapshot.models;
  s.selector_ = snapshot.selector;
  s.init_ = snapshot.init;
  s.pending_ = snapshot.pending;
  s.phase_ = snapshot.phase;
  s.iteration_ = snapshot.iteration;
  s.history_ = snapshot.history;
  return s;
}

}  // namespace cellsift
