#pragma once
// nlohmann converters shared by the snapshot and report writers.

#include "cellsift/active_learner.hpp"
#include "json.hpp"

namespace cellsift::jsonio {

using json = nlohmann::ordered_json;

json cell(CellRef c);
CellRef cell_from(const json& j);

json label(const Label& l);
Label label_from(const json& j);

json detection(const DetectionResult& d);
DetectionResult detection_from(const json& j);

json column_summary(const ColumnSummary& s);
ColumnSummary column_summary_from(const json& j);

json summary(const IterationSummary& s);
IterationSummary summary_from(const json& j);

json batch(const BatchRequest& b, const Table* table = nullptr);
BatchRequest batch_from(const json& j);

}  // namespace cellsift::jsonio
