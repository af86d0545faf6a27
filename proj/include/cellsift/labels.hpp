#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsift/table.hpp"

namespace cellsift {

enum class LabelValue { Erroneous, Correct };
enum class LabelSource { Human, Oracle };

struct Label {
  CellRef cell;
  LabelValue value = LabelValue::Correct;
  LabelSource source = LabelSource::Human;
  int iteration = 0;

  friend bool operator==(const Label&, const Label&) = default;
};

const char* to_string(LabelValue v) noexcept;
const char* to_string(LabelSource s) noexcept;
LabelValue parse_label_value(std::string_view s);
LabelSource parse_label_source(std::string_view s);

struct ColumnLabelCounts {
  std::size_t erroneous = 0;
  std::size_t correct = 0;
  std::size_t total() const noexcept { return erroneous + correct; }
  friend bool operator==(const ColumnLabelCounts&, const ColumnLabelCounts&) = default;
};

/// Accumulated user labels; at most one label per cell.
class LabelStore {
 public:
  LabelStore() = default;
  LabelStore(std::size_t n_rows, std::size_t n_cols);

  /// Records every not-yet-labeled cell of the batch and returns the rejected
  /// duplicates. Throws OutOfBounds before mutating anything.
  std::vector<Label> submit(std::span<const Label> batch);

  /// Removes the label of a cell; returns it if one existed.
  std::optional<Label> retract(CellRef cell);

  const Label* find(CellRef cell) const;
  bool contains(CellRef cell) const { return find(cell) != nullptr; }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return counts_.size(); }
  const ColumnLabelCounts& counts(std::size_t col) const { return counts_.at(col); }

  /// Labels in submission order.
  std::vector<Label> labels() const;
  /// Labels of one column ordered by row.
  std::vector<Label> column_labels(std::size_t col) const;

  /// Recomputes the counters from the label set and compares.
  bool counters_consistent() const;

  friend bool operator==(const LabelStore& a, const LabelStore& b) {
    return a.n_rows_ == b.n_rows_ && a.labels() == b.labels();
  }

 private:
  std::size_t n_rows_ = 0;
  std::map<CellRef, std::pair<Label, std::size_t>> labels_;  // value: label, submission sequence
  std::vector<ColumnLabelCounts> counts_;
  std::size_t sequence_ = 0;
};

/// JSONL export: one {"row","col","label","source","iteration"} object per line.
std::string labels_to_jsonl(std::span<const Label> labels);
std::vector<Label> labels_from_jsonl(std::string_view text);
void write_labels_jsonl(std::span<const Label> labels, const std::filesystem::path& path);

}  // namespace cellsift
