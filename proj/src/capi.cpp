#include "cellsift/cellsift.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>

#include "cellsift/benchmarks.hpp"
#include "cellsift/error.hpp"
#include "cellsift/parallel.hpp"
#include "cellsift/report.hpp"
#include "cellsift/snapshot.hpp"
#include "json.hpp"

struct cellsift_session {
  std::mutex mutex;
  cellsift::Session session;

  explicit cellsift_session(cellsift::Session s) : session(std::move(s)) {}
};

namespace {

thread_local std::string g_last_error;

cellsift_status status_of(cellsift::ErrorCode code) {
  // The C codes mirror ErrorCode one to one.
  return static_cast<cellsift_status>(static_cast<int>(code));
}

template <class F>
cellsift_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return CELLSIFT_OK;
  } catch (const cellsift::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CELLSIFT_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CELLSIFT_E_INTERNAL;
  }
}

cellsift_status invalid(const char* what) {
  g_last_error = what;
  return CELLSIFT_E_INVALID_ARGUMENT;
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

struct TableRequest {
  cellsift::Table table;
  std::optional<cellsift::GroundTruth> truth;
  cellsift::SessionConfig config;
  bool has_config = false;
};

TableRequest parse_request(const char* text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw cellsift::Error(cellsift::ErrorCode::Decode, std::string("request: ") + e.what());
  }
  if (!j.is_object()) throw cellsift::Error(cellsift::ErrorCode::Decode, "request must be a JSON object");
  const bool header = j.value("has_header", true);
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw cellsift::Error(cellsift::ErrorCode::Decode, std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
  };
  TableRequest r;
  if (auto csv = str("csv")) {
    r.table = cellsift::parse_csv(*csv, header);
  } else if (auto path = str("data")) {
    r.table = cellsift::load_csv(*path, header);
  } else {
    throw cellsift::Error(cellsift::ErrorCode::Config, "request needs \"data\" (a path) or \"csv\" (inline text)");
  }
  std::optional<cellsift::Table> clean;
  if (auto csv = str("ground_truth_csv")) {
    clean = cellsift::parse_csv(*csv, header);
  } else if (auto path = str("ground_truth")) {
    clean = cellsift::load_csv(*path, header);
  }
  if (clean) r.truth = cellsift::attach_ground_truth(r.table, std::move(*clean));
  if (j.contains("config")) {
    if (!j.at("config").is_object()) throw cellsift::Error(cellsift::ErrorCode::Config, "config must be an object");
    r.config = cellsift::SessionConfig::from_json(j.at("config").dump());
    r.has_config = true;
  }
  return r;
}

template <class F>
cellsift_status with_session(cellsift_session* s, F&& f) {
  if (!s) return invalid("session handle is null");
  return guarded([&] {
    std::lock_guard lock(s->mutex);
    f(s->session);
  });
}

template <class F>
cellsift_status string_out(cellsift_session* s, char** out, F&& f) {
  if (!out) return invalid("output pointer is null");
  *out = nullptr;
  return with_session(s, [&](cellsift::Session& session) { *out = copy_out(f(session)); });
}

}  // namespace

extern "C" {

const char* cellsift_version(void) { return "0.1.0"; }

const char* cellsift_status_name(cellsift_status status) {
  if (status == CELLSIFT_OK) return "Ok";
  if (status == CELLSIFT_E_INVALID_ARGUMENT) return "InvalidArgument";
  const int v = static_cast<int>(status);
  if (v < 1 || v > static_cast<int>(cellsift::ErrorCode::Internal)) return "Unknown";
  return cellsift::error_code_name(static_cast<cellsift::ErrorCode>(v));
}

const char* cellsift_last_error(void) { return g_last_error.c_str(); }

void cellsift_string_free(char* s) { std::free(s); }

void cellsift_set_threads(unsigned n) { cellsift::set_max_threads(n); }

cellsift_status cellsift_session_create(const char* request, cellsift_session** out) {
  if (!request || !out) return invalid("request and output pointer are required");
  *out = nullptr;
  return guarded([&] {
    auto r = parse_request(request);
    *out = new cellsift_session(cellsift::Session(std::move(r.table), std::move(r.truth), std::move(r.config)));
  });
}

cellsift_status cellsift_session_restore(const char* snapshot_path, const char* request, cellsift_session** out) {
  if (!snapshot_path || !request || !out) return invalid("snapshot path, request and output pointer are required");
  *out = nullptr;
  return guarded([&] {
    auto r = parse_request(request);
    const auto snapshot = cellsift::load_session(snapshot_path);
    if (r.has_config && !(r.config == snapshot.config)) {
      throw cellsift::Error(cellsift::ErrorCode::Config, "request config differs from the snapshot's config");
    }
    *out = new cellsift_session(cellsift::Session::restore(snapshot, std::move(r.table), std::move(r.truth)));
  });
}

void cellsift_session_destroy(cellsift_session* session) { delete session; }

cellsift_status cellsift_session_batch(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::batch_json(session); });
}

cellsift_status cellsift_session_submit(cellsift_session* s, const char* labels, char** out) {
  if (!labels) return invalid("labels are required");
  if (out) *out = nullptr;
  return with_session(s, [&](cellsift::Session& session) {
    const auto parsed = cellsift::labels_from_json(labels);
    const auto summary = session.submit(parsed);
    if (out) *out = copy_out(cellsift::summary_json(summary));
  });
}

cellsift_status cellsift_session_oracle_labels(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::oracle_labels_json(session); });
}

cellsift_status cellsift_session_run_oracle(cellsift_session* s) {
  return with_session(s, [](cellsift::Session& session) { session.run_oracle(); });
}

cellsift_status cellsift_session_status(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::status_json(session); });
}

cellsift_status cellsift_session_report(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::report_json(session); });
}

cellsift_status cellsift_session_run_log(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::run_log_jsonl(session); });
}

cellsift_status cellsift_session_explain(cellsift_session* s, size_t row, size_t col, char** out) {
  return string_out(s, out, [&](const cellsift::Session& session) {
    return cellsift::explanation_json(session, {row, col});
  });
}

cellsift_status cellsift_session_result(cellsift_session* s, char** out) {
  return string_out(s, out, [](const cellsift::Session& session) { return cellsift::result_json(session); });
}

cellsift_status cellsift_session_feature_names(cellsift_session* s, size_t col, char** out) {
  return string_out(s, out, [&](const cellsift::Session& session) {
    session.table().check_bounds({0, col});
    return session.features().registry(col).to_json();
  });
}

cellsift_status cellsift_session_finished(cellsift_session* s, int* finished) {
  if (!finished) return invalid("output pointer is null");
  return with_session(s, [&](const cellsift::Session& session) { *finished = session.finished() ? 1 : 0; });
}

cellsift_status cellsift_session_save(cellsift_session* s, const char* path) {
  if (!path) return invalid("path is required");
  return with_session(s, [&](const cellsift::Session& session) { cellsift::save_session(session.snapshot(), path); });
}

cellsift_status cellsift_session_export_labels(cellsift_session* s, const char* path) {
  if (!path) return invalid("path is required");
  return with_session(s, [&](const cellsift::Session& session) {
    cellsift::write_labels_jsonl(session.labels().labels(), path);
  });
}

cellsift_status cellsift_inject(const char* clean_path, int has_header, const char* plan_path, const char* dirty_path,
                                const char* truth_path) {
  if (!clean_path || !plan_path || !dirty_path || !truth_path) return invalid("all paths are required");
  return guarded([&] {
    const auto plan = cellsift::InjectionPlan::load(plan_path);
    const auto clean = cellsift::load_csv(clean_path, has_header != 0);
    const auto result = cellsift::inject_errors(clean, plan);
    cellsift::write_csv(result.dirty, dirty_path);
    cellsift::write_csv(result.truth.table(), truth_path);
  });
}

cellsift_status cellsift_generate(const char* scenario, size_t rows, unsigned long long seed, const char* dirty_path,
                                  const char* truth_path) {
  if (!scenario || !dirty_path || !truth_path) return invalid("scenario and paths are required");
  return guarded([&] {
    const auto bench = cellsift::make_benchmark(cellsift::parse_scenario(scenario), rows, seed);
    cellsift::write_csv(bench.injected.dirty, dirty_path);
    cellsift::write_csv(bench.clean, truth_path);
  });
}

cellsift_status cellsift_convergence_csv(const char* const* run_log_paths, size_t n, char** out) {
  if (!out || (n > 0 && !run_log_paths)) return invalid("run log paths and output pointer are required");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::vector<cellsift::ConvergencePoint>> runs;
    for (size_t i = 0; i < n; ++i) {
      if (!run_log_paths[i]) throw cellsift::Error(cellsift::ErrorCode::Config, "run log path is null");
      std::ifstream in(run_log_paths[i], std::ios::binary);
      if (!in) throw cellsift::Error(cellsift::ErrorCode::Io, std::string("cannot open '") + run_log_paths[i] + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      runs.push_back(cellsift::curve_from_run_log(ss.str()));
    }
    *out = copy_out(cellsift::convergence_csv(cellsift::record_convergence(runs)));
  });
}

}  // extern "C"
