#include "cellsift/report.hpp"

#include "cellsift/error.hpp"
#include "json_io.hpp"

namespace cellsift {

namespace {

using jsonio::json;

json per_column_table(const Session& session) {
  json out = json::array();
  const auto predicted = session.final_predictions();
  std::vector<std::size_t> flagged(session.table().n_cols(), 0);
  for (const auto& c : predicted) ++flagged[c.col];
  for (const auto& s : session.column_summaries()) {
    json c = jsonio::column_summary(s);
    const auto& model = session.models()[s.column];
    c["predicted_errors"] = flagged[s.column];
    c["max_depth"] = model.hyperparams.max_depth;
    c["min_leaf"] = model.hyperparams.min_leaf;
    if (const auto& truth = session.ground_truth()) {
      c["detection"] = jsonio::detection(score_column(predicted, *truth, session.table(), s.column));
    }
    out.push_back(std::move(c));
  }
  return out;
}

json curve(const Session& session) {
  json out = json::array();
  for (const auto& p : session.convergence()) {
    out.push_back({{"labels_used", p.labels_used}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
  }
  return out;
}

}  // namespace

std::string batch_json(const Session& session) {
  const BatchRequest* batch = session.pending_batch();
  if (!batch) {
    json j;
    j["finished"] = true;
    j["column"] = nullptr;
    j["cells"] = json::array();
    return j.dump();
  }
  json j = jsonio::batch(*batch, &session.table());
  j["finished"] = false;
  j["iteration"] = session.iteration();
  j["budget_remaining"] = session.budget_remaining();
  return j.dump();
}

std::string summary_json(const IterationSummary& summary) { return jsonio::summary(summary).dump(); }

std::string status_json(const Session& session) {
  json j;
  j["phase"] = to_string(session.phase());
  j["iteration"] = session.iteration();
  j["labels_used"] = session.labels_used();
  j["budget"] = session.config().budget;
  j["budget_remaining"] = session.budget_remaining();
  j["strategy"] = to_string(session.config().strategy);
  j["schema"] = session.table().schema();
  j["n_rows"] = session.table().n_rows();
  j["per_column"] = per_column_table(session);
  auto& history = j["history"] = json::array();
  for (const auto& h : session.history()) history.push_back(jsonio::summary(h));
  j["convergence"] = curve(session);
  return j.dump();
}

std::string report_json(const Session& session) {
  json j;
  const auto score = session.current_score();
  j["final_f1"] = score ? json(score->f1) : json(nullptr);
  j["final_precision"] = score ? json(score->precision) : json(nullptr);
  j["final_recall"] = score ? json(score->recall) : json(nullptr);
  j["labels_used"] = session.labels_used();
  j["budget"] = session.config().budget;
  j["iterations"] = session.iteration();
  j["strategy"] = to_string(session.config().strategy);
  j["seed"] = session.config().seed;
  j["predicted_errors"] = session.final_predictions().size();
  if (score) {
    j["true_positives"] = score->true_positives;
    j["false_positives"] = score->false_positives;
    j["false_negatives"] = score->false_negatives;
  }
  j["per_column"] = per_column_table(session);
  j["convergence_curve"] = curve(session);
  j["config"] = json::parse(session.config().to_json());
  return j.dump(2) + "\n";
}

std::string run_log_jsonl(const Session& session) {
  std::string out;
  for (const auto& h : session.history()) {
    out += jsonio::summary(h).dump();
    out += '\n';
  }
  return out;
}

std::string explanation_json(const Session& session, CellRef cell) {
  const auto e = session.explain(cell);
  json j;
  j["row"] = cell.row;
  j["col"] = cell.col;
  j["column_name"] = session.table().column_name(cell.col);
  j["value"] = session.table().at(cell);
  j["probability"] = session.probability(cell);
  auto& path = j["path"] = json::array();
  for (const auto& step : e.path) {
    path.push_back({{"feature", step.feature},
                    {"comparison", step.comparison},
                    {"threshold", step.threshold},
                    {"value", step.value}});
  }
  j["erroneous_fraction"] = e.erroneous_fraction;
  j["correct_fraction"] = e.correct_fraction;
  j["verdict"] = e.erroneous ? "erroneous" : "correct";
  j["text"] = e.render("D[" + std::to_string(cell.row) + ", " + session.table().column_name(cell.col) + "]");
  return j.dump();
}

std::string result_json(const Session& session) {
  json j;
  auto& errors = j["errors"] = json::array();
  for (const auto& c : session.final_predictions()) {
    errors.push_back({{"row", c.row},
                      {"col", c.col},
                      {"probability", session.probability(c)},
                      {"labeled", session.labels().contains(c)}});
  }
  return j.dump();
}

std::string oracle_labels_json(const Session& session) {
  json j;
  auto& labels = j["labels"] = json::array();
  for (const auto& l : session.oracle_answers()) labels.push_back(jsonio::label(l));
  return j.dump();
}

std::vector<Label> labels_from_json(std::string_view text, LabelSource source) {
  std::vector<Label> out;
  try {
    const auto j = json::parse(text);
    const json* list = &j;
    if (j.is_object()) list = &j.at("labels");
    if (!list->is_array()) throw Error(ErrorCode::Decode, "labels must be an array");
    for (const auto& e : *list) {
      if (!e.is_object()) throw Error(ErrorCode::Decode, "each label must be an object");
      Label l;
      l.cell = jsonio::cell_from(e);
      l.value = parse_label_value(e.at("label").get<std::string>());
      l.source = e.contains("source") ? parse_label_source(e.at("source").get<std::string>()) : source;
      out.push_back(l);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("labels: ") + e.what());
  }
  return out;
}

}  // namespace cellsift
