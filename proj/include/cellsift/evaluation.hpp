#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cellsift/labels.hpp"
#include "cellsift/random.hpp"
#include "cellsift/table.hpp"

namespace cellsift {

/// Erroneous iff the dirty value differs from the ground-truth value (exact bytes).
Label oracle_label(const Table& dirty, const GroundTruth& truth, CellRef cell, int iteration = 0);

/// Every cell whose dirty value differs from ground truth, row-major.
std::vector<CellRef> true_errors(const Table& dirty, const GroundTruth& truth);

struct DetectionResult {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;
};

/// P = 1 for an empty prediction set, R = 1 for an error-free table, F1 = 0 when P + R = 0.
DetectionResult score(std::span<const CellRef> predicted, const GroundTruth& truth, const Table& dirty);
DetectionResult score_counts(std::size_t tp, std::size_t fp, std::size_t fn);
/// score() restricted to the cells of one column.
DetectionResult score_column(std::span<const CellRef> predicted, const GroundTruth& truth, const Table& dirty,
                             std::size_t col);

enum class ErrorType { Typo, Missing, FormatViolation, CrossColumnViolation, CorrelatedPair };
const char* to_string(ErrorType t) noexcept;
ErrorType parse_error_type(std::string_view s);

struct ColumnInjection {
  std::string column;
  double rate = 0.0;
  std::vector<ErrorType> types{ErrorType::Typo};
  /// Characters removed by FormatViolation.
  std::string markers = "$:";
};

/// `dependent` is functionally determined by `determinant` in the clean data.
struct ColumnRule {
  std::string determinant;
  std::string dependent;
};

/// With `rate`, corrupt both columns of the same row.
struct PairInjection {
  std::string first;
  std::string second;
  double rate = 0.0;
  ErrorType first_type = ErrorType::Typo;
  ErrorType second_type = ErrorType::Typo;
};

struct InjectionPlan {
  std::uint64_t seed = 1;
  std::vector<ColumnInjection> columns;
  std::vector<ColumnRule> rules;
  std::vector<PairInjection> pairs;

  std::string to_json() const;
  /// Throws BadPlan on malformed input.
  static InjectionPlan from_json(std::string_view text);
  static InjectionPlan load(const std::filesystem::path& path);
};

struct Injection {
  Table dirty;
  GroundTruth truth;
  std::vector<CellRef> mutated;  // row-major
};

/// Targets round(rate * N) cells per column (pair rows first) and mutates
/// each so that it differs from the clean value. Throws BadPlan.
Injection inject_errors(const Table& clean, const InjectionPlan& plan);

/// Single-character substitution, deletion, or insertion; never returns `value`.
std::string typo(const std::string& value, Rng& rng);

struct ConvergencePoint {
  std::size_t labels_used = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct AggregatePoint {
  std::size_t labels_used = 0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_precision = 0.0;
  double std_precision = 0.0;
  double mean_recall = 0.0;
  double std_recall = 0.0;
};

/// Reads the "global" metrics of every run-log line that carries them.
std::vector<ConvergencePoint> curve_from_run_log(std::string_view jsonl);

/// Aligns runs on the union of their label counts (last observation carried
/// forward, starting where every run has an observation) and reports mean and
/// population standard deviation. Throws EmptyLog.
std::vector<AggregatePoint> record_convergence(std::span<const std::vector<ConvergencePoint>> runs);

/// labels_used,mean_f1,std_f1,mean_p,mean_r
std::string convergence_csv(std::span<const AggregatePoint> points);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};
/// Population standard deviation.
MeanStd mean_std(std::span<const double> values);

}  // namespace cellsift
