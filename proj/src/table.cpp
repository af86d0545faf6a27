#include "cellsift/table.hpp"

#include <fstream>
#include <sstream>

#include "cellsift/error.hpp"

namespace cellsift {

Table::Table(std::vector<std::string> schema, std::vector<std::vector<std::string>> rows)
    : schema_(std::move(schema)), n_rows_(rows.size()) {
  if (schema_.empty()) throw Error(ErrorCode::EmptyTable, "table has no columns");
  if (rows.empty()) throw Error(ErrorCode::EmptyTable, "table has no data rows");
  cells_.reserve(rows.size() * schema_.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema_.size()) {
      throw RaggedRowsError(r + 1, rows[r].size(), schema_.size());
    }
    for (auto& cell : rows[r]) cells_.push_back(std::move(cell));
  }
}

void Table::check_bounds(CellRef ref) const {
  if (!contains(ref)) {
    throw Error(ErrorCode::OutOfBounds, "cell (" + std::to_string(ref.row) + ", " +
                                            std::to_string(ref.col) + ") outside " +
                                            std::to_string(n_rows_) + "x" +
                                            std::to_string(schema_.size()) + " table");
  }
}

std::vector<std::string> Table::row(std::size_t row) const {
  auto first = cells_.begin() + static_cast<std::ptrdiff_t>(row * schema_.size());
  return {first, first + static_cast<std::ptrdiff_t>(schema_.size())};
}

std::vector<std::string_view> Table::column(std::size_t col) const {
  std::vector<std::string_view> out;
  out.reserve(n_rows_);
  for (std::size_t i = 0; i < n_rows_; ++i) out.emplace_back(at(i, col));
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  // field separator outside the byte range of any string content
  h ^= 0x100;
  h *= kFnvPrime;
}

}  // namespace

std::uint64_t Table::fingerprint() const noexcept {
  std::uint64_t h = kFnvOffset;
  for (const auto& name : schema_) fnv_mix(h, name);
  for (const auto& cell : cells_) fnv_mix(h, cell);
  return h;
}

GroundTruth attach_ground_truth(const Table& dirty, Table clean) {
  using Dim = ShapeMismatchError::Dimension;
  if (clean.n_rows() != dirty.n_rows()) {
    throw ShapeMismatchError(Dim::Rows, "ground truth has " + std::to_string(clean.n_rows()) +
                                            " rows, dirty table has " +
                                            std::to_string(dirty.n_rows()));
  }
  if (clean.n_cols() != dirty.n_cols()) {
    throw ShapeMismatchError(Dim::Columns, "ground truth has " + std::to_string(clean.n_cols()) +
                                               " columns, dirty table has " +
                                               std::to_string(dirty.n_cols()));
  }
  for (std::size_t j = 0; j < dirty.n_cols(); ++j) {
    if (clean.column_name(j) != dirty.column_name(j)) {
      throw ShapeMismatchError(Dim::Schema, "column " + std::to_string(j) + " is named '" +
                                                clean.column_name(j) + "' in ground truth but '" +
                                                dirty.column_name(j) + "' in dirty table");
    }
  }
  return GroundTruth(std::move(clean));
}

namespace {

// Splits RFC 4180 text into records. A trailing line break does not start a record.
std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  if (text.starts_with("\xEF\xBB\xBF")) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::Decode, "unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Table parse_csv(std::string_view text, bool has_header) {
  auto records = split_records(text);
  if (records.empty()) throw Error(ErrorCode::EmptyTable, "CSV input is empty");

  std::vector<std::string> schema;
  std::size_t first_data = 0;
  if (has_header) {
    schema = std::move(records.front());
    first_data = 1;
  } else {
    for (std::size_t j = 0; j < records.front().size(); ++j) schema.push_back("col_" + std::to_string(j));
  }
  const std::size_t width = schema.size();
  for (std::size_t r = first_data; r < records.size(); ++r) {
    if (records[r].size() != width) throw RaggedRowsError(r + 1, records[r].size(), width);
  }
  if (records.size() == first_data) throw Error(ErrorCode::EmptyTable, "CSV has no data rows");
  std::vector<std::vector<std::string>> rows(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(first_data)),
                                             std::make_move_iterator(records.end()));
  return Table(std::move(schema), std::move(rows));
}

Table load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "failed reading '" + path.string() + "'");
  return parse_csv(buffer.str(), has_header);
}

std::string to_csv(const Table& table, bool with_header) {
  std::string out;
  auto emit_row = [&](auto&& get, std::size_t width) {
    for (std::size_t j = 0; j < width; ++j) {
      if (j) out.push_back(',');
      append_field(out, get(j));
    }
    // A lone empty field would otherwise serialize to an empty line.
    if (width == 1 && get(0).empty()) out.append("\"\"");
    out.push_back('\n');
  };
  const std::size_t m = table.n_cols();
  if (with_header) {
    emit_row([&](std::size_t j) -> std::string_view { return table.column_name(j); }, m);
  }
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    emit_row([&](std::size_t j) -> std::string_view { return table.at(i, j); }, m);
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path, bool with_header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << to_csv(table, with_header);
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

}  // namespace cellsift
