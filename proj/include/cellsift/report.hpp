#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cellsift/active_learner.hpp"

namespace cellsift {

/// {"finished", "column", "column_name", "initialization", "cells": [{row, col, value, tuple, disagreement, certainty}]}
std::string batch_json(const Session& session);
std::string summary_json(const IterationSummary& summary);
/// Phase, budget, per-column table, iteration history and convergence points.
std::string status_json(const Session& session);
/// {final_f1, final_precision, final_recall, labels_used, per_column, convergence_curve, ...};
/// the final_* fields are null without ground truth.
std::string report_json(const Session& session);
/// One summary object per line: initialization completion, then every iteration.
std::string run_log_jsonl(const Session& session);
std::string explanation_json(const Session& session, CellRef cell);
/// {"errors": [{row, col, probability, labeled}]} in row-major order.
std::string result_json(const Session& session);
/// Oracle answers for the pending batch, in the body format accepted by labels_from_json.
std::string oracle_labels_json(const Session& session);

/// Parses {"labels": [{"row", "col", "label"}]} (a bare array is accepted too).
/// Throws Decode on malformed input.
std::vector<Label> labels_from_json(std::string_view text, LabelSource source = LabelSource::Human);

}  // namespace cellsift
