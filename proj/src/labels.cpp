#include "cellsift/labels.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "cellsift/error.hpp"

namespace cellsift {

const char* to_string(LabelValue v) noexcept {
  return v == LabelValue::Erroneous ? "erroneous" : "correct";
}

const char* to_string(LabelSource s) noexcept {
  return s == LabelSource::Human ? "human" : "oracle";
}

LabelValue parse_label_value(std::string_view s) {
  if (s == "erroneous") return LabelValue::Erroneous;
  if (s == "correct") return LabelValue::Correct;
  throw Error(ErrorCode::Decode, "unknown label '" + std::string(s) + "'");
}

LabelSource parse_label_source(std::string_view s) {
  if (s == "human") return LabelSource::Human;
  if (s == "oracle") return LabelSource::Oracle;
  throw Error(ErrorCode::Decode, "unknown label source '" + std::string(s) + "'");
}

LabelStore::LabelStore(std::size_t n_rows, std::size_t n_cols) : n_rows_(n_rows), counts_(n_cols) {}

std::vector<Label> LabelStore::submit(std::span<const Label> batch) {
  for (const auto& label : batch) {
    if (label.cell.row >= n_rows_ || label.cell.col >= counts_.size()) {
      throw Error(ErrorCode::OutOfBounds, "label for cell (" + std::to_string(label.cell.row) +
                                              ", " + std::to_string(label.cell.col) +
                                              ") is out of bounds");
    }
  }
  std::vector<Label> rejected;
  for (const auto& label : batch) {
    auto [it, inserted] = labels_.try_emplace(label.cell, label, sequence_);
    if (!inserted) {
      rejected.push_back(label);
      continue;
    }
    ++sequence_;
    auto& c = counts_[label.cell.col];
    (label.value == LabelValue::Erroneous ? c.erroneous : c.correct) += 1;
  }
  return rejected;
}

std::optional<Label> LabelStore::retract(CellRef cell) {
  auto it = labels_.find(cell);
  if (it == labels_.end()) return std::nullopt;
  Label out = it->second.first;
  auto& c = counts_.at(cell.col);
  (out.value == LabelValue::Erroneous ? c.erroneous : c.correct) -= 1;
  labels_.erase(it);
  return out;
}

const Label* LabelStore::find(CellRef cell) const {
  auto it = labels_.find(cell);
  return it == labels_.end() ? nullptr : &it->second.first;
}

std::vector<Label> LabelStore::labels() const {
  std::vector<std::pair<std::size_t, Label>> seq;
  seq.reserve(labels_.size());
  for (const auto& [cell, entry] : labels_) seq.emplace_back(entry.second, entry.first);
  std::sort(seq.begin(), seq.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Label> out;
  out.reserve(seq.size());
  for (auto& [_, label] : seq) out.push_back(label);
  return out;
}

std::vector<Label> LabelStore::column_labels(std::size_t col) const {
  std::vector<Label> out;
  for (const auto& [cell, entry] : labels_) {
    if (cell.col == col) out.push_back(entry.first);
  }
  std::sort(out.begin(), out.end(), [](const Label& a, const Label& b) { return a.cell.row < b.cell.row; });
  return out;
}

bool LabelStore::counters_consistent() const {
  std::vector<ColumnLabelCounts> fresh(counts_.size());
  for (const auto& [cell, entry] : labels_) {
    auto& c = fresh.at(cell.col);
    (entry.first.value == LabelValue::Erroneous ? c.erroneous : c.correct) += 1;
  }
  return fresh == counts_;
}

std::string labels_to_jsonl(std::span<const Label> labels) {
  std::string out;
  for (const auto& label : labels) {
    nlohmann::ordered_json j;
    j["row"] = label.cell.row;
    j["col"] = label.cell.col;
    j["label"] = to_string(label.value);
    j["source"] = to_string(label.source);
    j["iteration"] = label.iteration;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<Label> labels_from_jsonl(std::string_view text) {
  std::vector<Label> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Label label;
      label.cell = {j.at("row").get<std::size_t>(), j.at("col").get<std::size_t>()};
      label.value = parse_label_value(j.at("label").get<std::string>());
      label.source = parse_label_source(j.value("source", std::string("human")));
      label.iteration = j.value("iteration", 0);
      out.push_back(label);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Decode, "label line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_labels_jsonl(std::span<const Label> labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << labels_to_jsonl(labels);
}

}  // namespace cellsift
