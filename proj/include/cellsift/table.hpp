#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cellsift {

struct CellRef {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const CellRef&, const CellRef&) = default;
  friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

/// Immutable N x M grid of UTF-8 strings with a named schema.
class Table {
 public:
  Table() = default;
  /// Validates that every row has schema.size() cells and that N, M >= 1.
  Table(std::vector<std::string> schema, std::vector<std::vector<std::string>> rows);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return schema_.size(); }
  const std::vector<std::string>& schema() const noexcept { return schema_; }
  const std::string& column_name(std::size_t col) const { return schema_.at(col); }

  const std::string& at(std::size_t row, std::size_t col) const {
    return cells_[row * schema_.size() + col];
  }
  const std::string& at(CellRef ref) const { return at(ref.row, ref.col); }

  bool contains(CellRef ref) const noexcept {
    return ref.row < n_rows_ && ref.col < schema_.size();
  }
  /// Throws OutOfBounds when ref is outside the grid.
  void check_bounds(CellRef ref) const;

  std::vector<std::string> row(std::size_t row) const;
  std::vector<std::string_view> column(std::size_t col) const;

  /// Stable 64-bit FNV-1a digest over schema and cells.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<std::string> schema_;
  std::vector<std::string> cells_;
  std::size_t n_rows_ = 0;
};

/// The clean version of a dirty table; same shape and schema.
class GroundTruth {
 public:
  const Table& table() const noexcept { return clean_; }
  const std::string& at(CellRef ref) const { return clean_.at(ref); }

 private:
  friend GroundTruth attach_ground_truth(const Table& dirty, Table clean);
  explicit GroundTruth(Table clean) : clean_(std::move(clean)) {}
  Table clean_;
};

/// Throws ShapeMismatchError on differing rows, columns, or header names.
GroundTruth attach_ground_truth(const Table& dirty, Table clean);

/// RFC 4180 parser. Synthetic names "col_0".."col_{M-1}" when has_header is false.
Table parse_csv(std::string_view text, bool has_header = true);
Table load_csv(const std::filesystem::path& path, bool has_header = true);

std::string to_csv(const Table& table, bool with_header = true);
void write_csv(const Table& table, const std::filesystem::path& path, bool with_header = true);

}  // namespace cellsift
