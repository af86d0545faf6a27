#include "cellsift/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cellsift/error.hpp"
#include "json_io.hpp"

namespace cellsift {

namespace {

using jsonio::json;

Phase phase_from(const std::string& s) {
  if (s == "initialization") return Phase::Initialization;
  if (s == "active") return Phase::Active;
  if (s == "finished") return Phase::Finished;
  throw Error(ErrorCode::Decode, "unknown phase '" + s + "'");
}

// Shortest round-trip decimal text, so a restore is bit-exact.
json array_of(std::span<const double> v) {
  json a = json::array();
  char buf[32];
  for (double x : v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    a.push_back(std::string(buf, end));
  }
  return a;
}

std::vector<double> doubles_from(const json& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& e : a) {
    const auto& s = e.get_ref<const std::string&>();
    double x = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || end != s.data() + s.size()) throw Error(ErrorCode::Decode, "bad number '" + s + "'");
    out.push_back(x);
  }
  return out;
}

json model_json(const ColumnModel& m) {
  json j;
  j["column"] = m.column;
  j["trained"] = m.trained;
  j["degenerate"] = m.degenerate;
  j["committee"] = json::parse(m.committee.to_json());
  j["surrogate"] = json::parse(m.surrogate.to_json());
  j["hyperparams"] = {{"max_depth", m.hyperparams.max_depth}, {"min_leaf", m.hyperparams.min_leaf}};
  j["cv"] = {{"folds", m.cv.folds}, {"fold_f1", m.cv.fold_f1}, {"mean_f1", m.cv.mean_f1},
             {"single_class", m.cv.single_class}};
  j["probabilities"] = array_of(m.probabilities);
  j["disagreement"] = array_of(m.disagreement);
  std::string pred, prev;
  for (char c : m.predictions) pred.push_back(c ? '1' : '0');
  for (char c : m.previous_predictions) prev.push_back(c ? '1' : '0');
  j["predictions"] = pred;
  j["previous_predictions"] = prev;
  j["mean_certainty"] = m.mean_certainty;
  j["prediction_change"] = m.prediction_change;
  j["last_trained_iteration"] = m.last_trained_iteration;
  return j;
}

std::vector<char> bits_from(const std::string& s) {
  std::vector<char> out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw Error(ErrorCode::Decode, "prediction string holds a non-binary character");
    out.push_back(c == '1' ? 1 : 0);
  }
  return out;
}

ColumnModel model_from(const json& j) {
  ColumnModel m;
  m.column = j.at("column").get<std::size_t>();
  m.trained = j.at("trained").get<bool>();
  m.degenerate = j.at("degenerate").get<bool>();
  m.committee = Committee::from_json(j.at("committee").dump());
  m.surrogate = DecisionTree::from_json(j.at("surrogate").dump());
  m.hyperparams = {j.at("hyperparams").at("max_depth").get<std::size_t>(),
                   j.at("hyperparams").at("min_leaf").get<std::size_t>()};
  const auto& cv = j.at("cv");
  m.cv.folds = cv.at("folds").get<std::size_t>();
  m.cv.fold_f1 = cv.at("fold_f1").get<std::vector<double>>();
  m.cv.mean_f1 = cv.at("mean_f1").get<double>();
  m.cv.single_class = cv.at("single_class").get<bool>();
  m.probabilities = doubles_from(j.at("probabilities"));
  m.disagreement = doubles_from(j.at("disagreement"));
  m.predictions = bits_from(j.at("predictions").get<std::string>());
  m.previous_predictions = bits_from(j.at("previous_predictions").get<std::string>());
  m.mean_certainty = j.at("mean_certainty").get<double>();
  m.prediction_change = j.at("prediction_change").get<double>();
  m.last_trained_iteration = j.at("last_trained_iteration").get<int>();
  return m;
}

}  // namespace

std::string snapshot_to_json(const SessionSnapshot& s) {
  json j;
  j["format_version"] = s.format_version;
  j["config"] = json::parse(s.config.to_json());
  // 64-bit values as strings: JSON readers outside C++ lose precision past 2^53.
  j["config_hash"] = std::to_string(s.config_hash);
  j["table_fingerprint"] = std::to_string(s.table_fingerprint);
  j["seed"] = std::to_string(s.seed);
  j["iteration"] = s.iteration;
  j["phase"] = to_string(s.phase);
  auto& labels = j["labels"] = json::array();
  for (const auto& l : s.labels) labels.push_back(jsonio::label(l));
  j["init"] = {{"current_column", s.init.current_column}, {"presented", s.init.presented}, {"cursor", s.init.cursor}};
  j["selector"] = {{"strategy", to_string(s.selector.strategy)},
                   {"round_robin_cursor", s.selector.round_robin_cursor},
                   {"warmup_remaining", s.selector.warmup_remaining},
                   {"mean_certainty", s.selector.mean_certainty},
                   {"cv_f1", s.selector.cv_f1},
                   {"prediction_change", s.selector.prediction_change},
                   {"seed", std::to_string(s.selector.seed)}};
  j["pending"] = s.pending ? jsonio::batch(*s.pending) : json(nullptr);
  auto& models = j["models"] = json::array();
  for (const auto& m : s.models) models.push_back(model_json(m));
  json block;
  block["n_rows"] = s.block.n_rows();
  block["n_cols"] = s.block.n_cols();
  auto& cols = block["columns"] = json::array();
  for (std::size_t c = 0; c < s.block.n_cols(); ++c) {
    if (!s.block.initialized(c)) {
      cols.push_back(nullptr);
    } else {
      cols.push_back(array_of(s.block.column(c)));
    }
  }
  j["block"] = std::move(block);
  auto& history = j["history"] = json::array();
  for (const auto& h : s.history) history.push_back(jsonio::summary(h));
  return j.dump();
}

SessionSnapshot snapshot_from_json(std::string_view text) {
  SessionSnapshot s;
  try {
    const auto j = json::parse(text);
    s.format_version = j.at("format_version").get<int>();
    if (s.format_version != kSnapshotFormatVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  "snapshot format version " + std::to_string(s.format_version) + " is not supported");
    }
    s.config = SessionConfig::from_json(j.at("config").dump());
    s.config_hash = std::stoull(j.at("config_hash").get<std::string>());
    s.table_fingerprint = std::stoull(j.at("table_fingerprint").get<std::string>());
    s.seed = std::stoull(j.at("seed").get<std::string>());
    s.iteration = j.at("iteration").get<int>();
    s.phase = phase_from(j.at("phase").get<std::string>());
    for (const auto& l : j.at("labels")) s.labels.push_back(jsonio::label_from(l));
    const auto& init = j.at("init");
    s.init.current_column = init.at("current_column").get<std::size_t>();
    s.init.presented = init.at("presented").get<std::vector<std::size_t>>();
    s.init.cursor = init.at("cursor").get<std::vector<std::size_t>>();
    const auto& sel = j.at("selector");
    s.selector.strategy = parse_strategy(sel.at("strategy").get<std::string>());
    s.selector.round_robin_cursor = sel.at("round_robin_cursor").get<std::size_t>();
    s.selector.warmup_remaining = sel.at("warmup_remaining").get<std::size_t>();
    s.selector.mean_certainty = sel.at("mean_certainty").get<std::vector<double>>();
    s.selector.cv_f1 = sel.at("cv_f1").get<std::vector<double>>();
    s.selector.prediction_change = sel.at("prediction_change").get<std::vector<double>>();
    s.selector.seed = std::stoull(sel.at("seed").get<std::string>());
    if (!j.at("pending").is_null()) s.pending = jsonio::batch_from(j.at("pending"));
    for (const auto& m : j.at("models")) s.models.push_back(model_from(m));
    const auto& block = j.at("block");
    s.block = ErrorProbabilityBlock(block.at("n_rows").get<std::size_t>(), block.at("n_cols").get<std::size_t>());
    const auto& cols = block.at("columns");
    if (cols.size() != s.block.n_cols()) throw Error(ErrorCode::Decode, "error block column count mismatch");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].is_null()) continue;
      s.block.refresh(c, doubles_from(cols[c]));
    }
    for (const auto& h : j.at("history")) s.history.push_back(jsonio::summary_from(h));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Decode, std::string("snapshot: ") + e.what());
  } catch (const std::logic_error& e) {  // stoull
    throw Error(ErrorCode::Decode, std::string("snapshot: bad integer field: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::Decode) throw;
    throw Error(ErrorCode::Decode, std::string("snapshot: ") + e.what());
  }
  return s;
}

void save_session(const SessionSnapshot& snapshot, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp + "'");
    out << snapshot_to_json(snapshot);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move snapshot into '" + path.string() + "': " + ec.message());
}

SessionSnapshot load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return snapshot_from_json(ss.str());
}

}  // namespace cellsift
