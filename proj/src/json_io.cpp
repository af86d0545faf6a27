#include "json_io.hpp"

#include "cellsift/error.hpp"

namespace cellsift::jsonio {

json cell(CellRef c) { return {{"row", c.row}, {"col", c.col}}; }

CellRef cell_from(const json& j) { return {j.at("row").get<std::size_t>(), j.at("col").get<std::size_t>()}; }

json label(const Label& l) {
  return {{"row", l.cell.row},
          {"col", l.cell.col},
          {"label", to_string(l.value)},
          {"source", to_string(l.source)},
          {"iteration", l.iteration}};
}

Label label_from(const json& j) {
  Label l;
  l.cell = cell_from(j);
  l.value = parse_label_value(j.at("label").get<std::string>());
  if (j.contains("source")) l.source = parse_label_source(j.at("source").get<std::string>());
  l.iteration = j.value("iteration", 0);
  return l;
}

json detection(const DetectionResult& d) {
  return {{"precision", d.precision},
          {"recall", d.recall},
          {"f1", d.f1},
          {"true_positives", d.true_positives},
          {"false_positives", d.false_positives},
          {"false_negatives", d.false_negatives}};
}

DetectionResult detection_from(const json& j) {
  DetectionResult d;
  d.precision = j.at("precision").get<double>();
  d.recall = j.at("recall").get<double>();
  d.f1 = j.at("f1").get<double>();
  d.true_positives = j.at("true_positives").get<std::size_t>();
  d.false_positives = j.at("false_positives").get<std::size_t>();
  d.false_negatives = j.at("false_negatives").get<std::size_t>();
  return d;
}

json column_summary(const ColumnSummary& s) {
  return {{"column", s.column},
          {"name", s.name},
          {"labels", s.labels},
          {"erroneous_labels", s.erroneous_labels},
          {"mean_certainty", s.mean_certainty},
          {"cv_f1", s.cv_f1},
          {"prediction_change", s.prediction_change},
          {"degenerate", s.degenerate},
          {"trained", s.trained}};
}

ColumnSummary column_summary_from(const json& j) {
  ColumnSummary s;
  s.column = j.at("column").get<std::size_t>();
  s.name = j.at("name").get<std::string>();
  s.labels = j.at("labels").get<std::size_t>();
  s.erroneous_labels = j.at("erroneous_labels").get<std::size_t>();
  s.mean_certainty = j.at("mean_certainty").get<double>();
  s.cv_f1 = j.at("cv_f1").get<double>();
  s.prediction_change = j.at("prediction_change").get<double>();
  s.degenerate = j.at("degenerate").get<bool>();
  s.trained = j.at("trained").get<bool>();
  return s;
}

namespace {

Phase phase_from(const std::string& s) {
  if (s == "initialization") return Phase::Initialization;
  if (s == "active") return Phase::Active;
  if (s == "finished") return Phase::Finished;
  throw Error(ErrorCode::Decode, "unknown phase '" + s + "'");
}

}  // namespace

json summary(const IterationSummary& s) {
  json j;
  j["iteration"] = s.iteration;
  j["phase"] = to_string(s.phase);
  j["column"] = s.column ? json(*s.column) : json(nullptr);
  j["labels_used"] = s.labels_used;
  j["budget_remaining"] = s.budget_remaining;
  auto& cols = j["per_column"] = json::array();
  for (const auto& c : s.per_column) cols.push_back(column_summary(c));
  j["global"] = s.global ? detection(*s.global) : json(nullptr);
  return j;
}

IterationSummary summary_from(const json& j) {
  IterationSummary s;
  s.iteration = j.at("iteration").get<int>();
  s.phase = phase_from(j.at("phase").get<std::string>());
  if (!j.at("column").is_null()) s.column = j.at("column").get<std::size_t>();
  s.labels_used = j.at("labels_used").get<std::size_t>();
  s.budget_remaining = j.at("budget_remaining").get<std::size_t>();
  for (const auto& c : j.at("per_column")) s.per_column.push_back(column_summary_from(c));
  if (!j.at("global").is_null()) s.global = detection_from(j.at("global"));
  return s;
}

json batch(const BatchRequest& b, const Table* table) {
  json j;
  j["column"] = b.column;
  if (table) j["column_name"] = table->column_name(b.column);
  j["initialization"] = b.initialization;
  auto& cells = j["cells"] = json::array();
  for (std::size_t i = 0; i < b.cells.size(); ++i) {
    json c = cell(b.cells[i]);
    if (table) {
      c["value"] = table->at(b.cells[i]);
      c["tuple"] = table->row(b.cells[i].row);
    }
    c["disagreement"] = b.disagreement[i];
    c["certainty"] = b.certainty[i];
    cells.push_back(std::move(c));
  }
  return j;
}

BatchRequest batch_from(const json& j) {
  BatchRequest b;
  b.column = j.at("column").get<std::size_t>();
  b.initialization = j.at("initialization").get<bool>();
  for (const auto& c : j.at("cells")) {
    b.cells.push_back(cell_from(c));
    b.disagreement.push_back(c.at("disagreement").get<double>());
    b.certainty.push_back(c.at("certainty").get<double>());
  }
  return b;
}

}  // namespace cellsift::jsonio
