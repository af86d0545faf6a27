#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsift/classifier.hpp"
#include "cellsift/embedding.hpp"
#include "cellsift/evaluation.hpp"
#include "cellsift/featurizer.hpp"
#include "cellsift/labels.hpp"
#include "cellsift/table.hpp"

namespace cellsift {

enum class Strategy { Random, RoundRobin, MinCertainty, MaxError, MaxPredictionChange };
const char* to_string(Strategy s) noexcept;
/// Accepts short (ra, rr, mc, me, mpc) and long names; throws Config.
Strategy parse_strategy(std::string_view s);

struct SessionConfig {
  std::size_t batch_size = 10;
  /// Total labels, initialization included.
  std::size_t budget = 300;
  Strategy strategy = Strategy::MinCertainty;
  FeatureConfig features;
  std::uint64_t seed = 42;
  std::size_t cv_folds = 4;
  std::size_t committee_size = kDefaultCommitteeSize;
  std::vector<Hyperparams> grid = default_grid();
  std::size_t init_probe_cap = 20;

  /// Throws Config.
  void validate() const;
  std::string to_json() const;
  /// Missing keys keep their defaults; throws Config on bad values.
  static SessionConfig from_json(std::string_view text);
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

/// Alternating rare/frequent probe order over a column's cells: cells ranked
/// by value frequency (ties by the value's first row, then row), taken
/// alternately from the rare end and the frequent end without repeats.
std::vector<CellRef> probe_order(const Table& table, std::size_t col);

/// Minimum labels the initialization round can consume.
std::size_t initialization_minimum(const Table& table);

struct SelectorState {
  Strategy strategy = Strategy::MinCertainty;
  std::size_t round_robin_cursor = 0;
  /// Selections still served round-robin before metric strategies activate.
  std::size_t warmup_remaining = 0;
  std::vector<double> mean_certainty;
  std::vector<double> cv_f1;
  std::vector<double> prediction_change;
  std::uint64_t seed = 0;

  friend bool operator==(const SelectorState&, const SelectorState&) = default;
};

/// Picks the next column among `selectable` ones. Ties go to the lowest index.
/// `draw` seeds the Random strategy. Throws NoSelectableColumn.
std::size_t select_column(SelectorState& state, std::span<const char> selectable, std::uint64_t draw);

struct BatchRequest {
  std::size_t column = 0;
  std::vector<CellRef> cells;
  std::vector<double> disagreement;
  std::vector<double> certainty;
  bool initialization = false;

  friend bool operator==(const BatchRequest&, const BatchRequest&) = default;
};

/// Unlabeled cells of `col` by descending disagreement, then ascending
/// certainty, then row; distinct values first, duplicates fill the rest.
/// Throws ColumnExhausted when nothing is left to label.
BatchRequest generate_batch(std::size_t col, std::span<const double> disagreement, std::span<const double> certainty,
                            const LabelStore& store, std::size_t k, const Table& table);

/// The trained classifier of one column plus its latest outputs.
struct ColumnModel {
  std::size_t column = 0;
  bool trained = false;
  /// Single label class after initialization; constant model, never selected.
  bool degenerate = false;
  Committee committee;
  DecisionTree surrogate;
  Hyperparams hyperparams;
  CvReport cv;
  std::vector<double> probabilities;
  std::vector<double> disagreement;
  std::vector<char> predictions;
  std::vector<char> previous_predictions;
  double mean_certainty = 1.0;
  double prediction_change = 0.0;
  int last_trained_iteration = -1;

  std::vector<double> certainties() const { return certainty(probabilities); }

  friend bool operator==(const ColumnModel&, const ColumnModel&) = default;
};

struct ColumnSummary {
  std::size_t column = 0;
  std::string name;
  std::size_t labels = 0;
  std::size_t erroneous_labels = 0;
  double mean_certainty = 1.0;
  double cv_f1 = 0.0;
  double prediction_change = 0.0;
  bool degenerate = false;
  bool trained = false;

  friend bool operator==(const ColumnSummary&, const ColumnSummary&) = default;
};

enum class Phase { Initialization, Active, Finished };
const char* to_string(Phase p) noexcept;

struct IterationSummary {
  int iteration = 0;
  Phase phase = Phase::Initialization;
  /// Column retrained in this step; none for initialization probe batches.
  std::optional<std::size_t> column;
  std::size_t labels_used = 0;
  std::size_t budget_remaining = 0;
  std::vector<ColumnSummary> per_column;
  std::optional<DetectionResult> global;

  friend bool operator==(const IterationSummary& a, const IterationSummary& b) {
    auto same_global = [&] {
      if (a.global.has_value() != b.global.has_value()) return false;
      if (!a.global) return true;
      return a.global->true_positives == b.global->true_positives &&
             a.global->false_positives == b.global->false_positives &&
             a.global->false_negatives == b.global->false_negatives;
    };
    return a.iteration == b.iteration && a.phase == b.phase && a.column == b.column &&
           a.labels_used == b.labels_used && a.budget_remaining == b.budget_remaining &&
           a.per_column == b.per_column && same_global();
  }
};

struct InitializationState {
  std::size_t current_column = 0;
  std::vector<std::size_t> presented;  // probe cells shown per column
  std::vector<std::size_t> cursor;     // position in each column's probe order

  friend bool operator==(const InitializationState&, const InitializationState&) = default;
};

struct SessionSnapshot;

/// The two-dimensional active-learning loop as a batch state machine:
/// initialization probe batches, then one column batch per iteration, until
/// the budget is spent or no column is selectable.
class Session {
 public:
  /// Throws Config / BudgetExhausted.
  Session(Table table, std::optional<GroundTruth> truth, SessionConfig config);
  /// Rebuilds features from `table` and restores every piece of mutable state.
  static Session restore(const SessionSnapshot& snapshot, Table table, std::optional<GroundTruth> truth);

  Session(Session&&) noexcept = default;
  Session& operator=(Session&&) noexcept = default;

  const Table& table() const noexcept { return table_; }
  const std::optional<GroundTruth>& ground_truth() const noexcept { return truth_; }
  const SessionConfig& config() const noexcept { return config_; }
  const LabelStore& labels() const noexcept { return store_; }
  const FeatureMatrix& features() const noexcept { return features_; }
  const ErrorProbabilityBlock& error_block() const noexcept { return block_; }
  const std::vector<ColumnModel>& models() const noexcept { return models_; }
  const SelectorState& selector() const noexcept { return selector_; }
  Phase phase() const noexcept { return phase_; }
  int iteration() const noexcept { return iteration_; }
  std::size_t labels_used() const noexcept { return store_.size(); }
  std::size_t budget_remaining() const noexcept { return config_.budget - store_.size(); }
  bool finished() const noexcept { return phase_ == Phase::Finished; }

  /// Null once the session is finished.
  const BatchRequest* pending_batch() const noexcept { return pending_ ? &*pending_ : nullptr; }

  /// Labels must cover exactly the pending batch's cells (LabelMismatch otherwise).
  IterationSummary submit(std::span<const Label> labels);

  /// Ground-truth answers for the pending batch; throws Config without ground truth.
  std::vector<Label> oracle_answers() const;
  /// Answers batches from ground truth until the session finishes.
  void run_oracle();

  /// Labels win; otherwise the column model's p >= 0.5.
  std::vector<CellRef> final_predictions() const;
  double probability(CellRef cell) const;
  Explanation explain(CellRef cell) const;

  /// Summaries of initialization completion and every active iteration.
  const std::vector<IterationSummary>& history() const noexcept { return history_; }
  std::vector<ConvergencePoint> convergence() const;
  std::vector<ColumnSummary> column_summaries() const;
  std::optional<DetectionResult> current_score() const;

  SessionSnapshot snapshot() const;

 private:
  Session() = default;
  void build_features();
  void plan_next_batch();
  std::optional<BatchRequest> next_initialization_batch();
  void finish_initialization();
  void retrain(std::size_t col);
  void set_constant_model(std::size_t col, double p);
  std::size_t unlabeled_count(std::size_t col) const;
  std::vector<char> selectable_columns() const;
  IterationSummary summarize(std::optional<std::size_t> column) const;

  Table table_;
  std::optional<GroundTruth> truth_;
  SessionConfig config_;
  std::optional<EmbeddingModel> embedding_;
  FeatureMatrix features_;
  ErrorProbabilityBlock block_;
  LabelStore store_;
  std::vector<ColumnModel> models_;
  SelectorState selector_;
  InitializationState init_;
  std::vector<std::vector<CellRef>> probe_orders_;
  std::optional<BatchRequest> pending_;
  Phase phase_ = Phase::Initialization;
  int iteration_ = 0;
  std::vector<IterationSummary> history_;
};

}  // namespace cellsift
