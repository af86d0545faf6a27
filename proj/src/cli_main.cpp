// cellsift command line: oracle runs, error injection, benchmark generation,
// convergence aggregation and the labeling service.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cellsift/cellsift.h"
#include "cellsift/service.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;

enum Exit { kOk = 0, kConfig = 2, kData = 3, kInternal = 4 };

int exit_code(cellsift_status st) {
  switch (st) {
    case CELLSIFT_OK: return kOk;
    case CELLSIFT_E_CONFIG:
    case CELLSIFT_E_BUDGET_EXHAUSTED:
    case CELLSIFT_E_BAD_PLAN:
    case CELLSIFT_E_INVALID_ARGUMENT:
      return kConfig;
    case CELLSIFT_E_IO:
    case CELLSIFT_E_RAGGED_ROWS:
    case CELLSIFT_E_EMPTY_TABLE:
    case CELLSIFT_E_SHAPE_MISMATCH:
    case CELLSIFT_E_DECODE:
    case CELLSIFT_E_VERSION_MISMATCH:
    case CELLSIFT_E_EMPTY_LOG:
    case CELLSIFT_E_OUT_OF_BOUNDS:
      return kData;
    default: return kInternal;
  }
}

// Thrown to unwind with a message and exit code.
struct Failure {
  int code;
  std::string message;
};

void check(cellsift_status st) {
  if (st != CELLSIFT_OK) {
    throw Failure{exit_code(st), std::string(cellsift_status_name(st)) + ": " + cellsift_last_error()};
  }
}

struct Session {
  cellsift_session* s = nullptr;
  ~Session() { cellsift_session_destroy(s); }
};

std::string take(char* p) {
  std::string out = p ? p : "";
  cellsift_string_free(p);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kData, "Io: cannot write '" + path + "'"};
  out << text;
  if (!out) throw Failure{kData, "Io: write failed for '" + path + "'"};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kData, "Io: cannot open '" + path + "'"};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunArgs {
  std::string data, ground_truth, report, run_log, config_file, snapshot, resume, labels_out;
  bool no_header = false;
  std::optional<std::size_t> budget, batch_size, folds, committee, ngram_order, embedding_dim;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  bool words = false, no_metadata = false, no_embedding = false, no_error_correlation = false;
  std::optional<std::size_t> stop_after;
  unsigned threads = 0;
};

json build_config(const RunArgs& a) {
  json c = json::object();
  if (!a.config_file.empty()) {
    try {
      c = json::parse(read_file(a.config_file));
    } catch (const json::exception& e) {
      throw Failure{kConfig, std::string("Config: ") + e.what()};
    }
    // A benchmark file may wrap the session config.
    if (c.contains("session")) c = c.at("session");
    if (!c.is_object()) throw Failure{kConfig, "Config: config file must hold a JSON object"};
  }
  if (a.budget) c["budget"] = *a.budget;
  if (a.batch_size) c["batch_size"] = *a.batch_size;
  if (a.seed) c["seed"] = *a.seed;
  if (a.strategy) c["strategy"] = *a.strategy;
  if (a.folds) c["cv_folds"] = *a.folds;
  if (a.committee) c["committee_size"] = *a.committee;
  auto& f = c["features"];
  if (!f.is_object()) f = json::object();
  if (a.ngram_order) f["ngram_order"] = *a.ngram_order;
  if (a.embedding_dim) f["embedding_dim"] = *a.embedding_dim;
  if (a.words) {
    f["words"] = true;
    f["ngrams"] = false;
  }
  if (a.no_metadata) f["metadata"] = false;
  if (a.no_embedding) f["embedding"] = false;
  if (a.no_error_correlation) f["error_correlation"] = false;
  if (f.empty()) c.erase("features");
  return c;
}

int run(const RunArgs& a) {
  if (a.ground_truth.empty()) throw Failure{kConfig, "Config: oracle runs need --ground-truth"};
  cellsift_set_threads(a.threads);
  json request = {{"data", a.data}, {"ground_truth", a.ground_truth}, {"has_header", !a.no_header}};
  auto config = build_config(a);
  // A resumed session keeps the snapshot's config unless one is given.
  if (a.resume.empty() || !config.empty()) request["config"] = std::move(config);
  const auto text = request.dump();
  Session session;
  if (!a.resume.empty()) {
    check(cellsift_session_restore(a.resume.c_str(), text.c_str(), &session.s));
  } else {
    check(cellsift_session_create(text.c_str(), &session.s));
  }
  if (a.stop_after) {
    // Answer a fixed number of batches, then keep the state for --snapshot.
    int finished = 0;
    for (std::size_t i = 0; i < *a.stop_after; ++i) {
      check(cellsift_session_finished(session.s, &finished));
      if (finished) break;
      char* labels = nullptr;
      check(cellsift_session_oracle_labels(session.s, &labels));
      const auto body = take(labels);
      check(cellsift_session_submit(session.s, body.c_str(), nullptr));
    }
  } else {
    check(cellsift_session_run_oracle(session.s));
  }
  char* out = nullptr;
  check(cellsift_session_report(session.s, &out));
  const auto report = take(out);
  if (a.report.empty()) {
    std::cout << report;
  } else {
    write_file(a.report, report);
  }
  if (!a.run_log.empty()) {
    check(cellsift_session_run_log(session.s, &out));
    write_file(a.run_log, take(out));
  }
  if (!a.snapshot.empty()) check(cellsift_session_save(session.s, a.snapshot.c_str()));
  if (!a.labels_out.empty()) check(cellsift_session_export_labels(session.s, a.labels_out.c_str()));
  return kOk;
}

cellsift::service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellsift: active-learning error detection for tables"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cellsift_version());

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Oracle-driven run; labels batches from ground truth until the budget is spent");
  run_cmd->add_option("--data", ra.data, "Dirty CSV")->required();
  run_cmd->add_option("--ground-truth", ra.ground_truth, "Clean CSV with the same shape");
  run_cmd->add_flag("--no-header", ra.no_header, "CSV files have no header row");
  run_cmd->add_option("--config", ra.config_file, "Session config JSON; flags override its fields");
  run_cmd->add_option("--budget", ra.budget, "Total labels");
  run_cmd->add_option("--batch-size", ra.batch_size, "Cells per query batch");
  run_cmd->add_option("--strategy", ra.strategy, "Column selector: ra, rr, mc, me, mpc");
  run_cmd->add_option("--seed", ra.seed, "Seed for every random choice");
  run_cmd->add_option("--cv-folds", ra.folds);
  run_cmd->add_option("--committee-size", ra.committee);
  run_cmd->add_option("--ngram-order", ra.ngram_order, "Character n-gram length");
  run_cmd->add_option("--embedding-dim", ra.embedding_dim);
  run_cmd->add_flag("--words", ra.words, "Word tokens instead of character n-grams");
  run_cmd->add_flag("--no-metadata", ra.no_metadata);
  run_cmd->add_flag("--no-embedding", ra.no_embedding);
  run_cmd->add_flag("--no-error-correlation", ra.no_error_correlation);
  run_cmd->add_option("--report", ra.report, "Report JSON path (stdout if omitted)");
  run_cmd->add_option("--run-log", ra.run_log, "Per-iteration JSONL log");
  run_cmd->add_option("--snapshot", ra.snapshot, "Save the session state here when done");
  run_cmd->add_option("--resume", ra.resume, "Continue from a saved session");
  run_cmd->add_option("--labels-out", ra.labels_out, "Export all labels as JSONL");
  run_cmd->add_option("--stop-after", ra.stop_after, "Answer at most this many batches");
  run_cmd->add_option("--threads", ra.threads, "Worker threads (0 = all cores)");

  std::string clean, plan, dirty_out, truth_out;
  bool inject_no_header = false;
  auto* inject_cmd = app.add_subcommand("inject", "Inject errors into a clean table");
  inject_cmd->add_option("--clean", clean, "Clean CSV")->required();
  inject_cmd->add_option("--plan", plan, "Injection plan JSON")->required();
  inject_cmd->add_option("--dirty-out", dirty_out)->required();
  inject_cmd->add_option("--truth-out", truth_out)->required();
  inject_cmd->add_flag("--no-header", inject_no_header);

  std::string scenario;
  std::size_t rows = 2000;
  std::uint64_t gen_seed = 1;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic benchmark table and its ground truth");
  gen_cmd->add_option("--scenario", scenario, "convergence, heterogeneous, format or correlated_pair")->required();
  gen_cmd->add_option("--rows", rows);
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--dirty-out", dirty_out)->required();
  gen_cmd->add_option("--truth-out", truth_out)->required();

  std::vector<std::string> logs;
  std::string curve_out;
  auto* curve_cmd = app.add_subcommand("curve", "Aggregate run logs of several seeds into a convergence CSV");
  curve_cmd->add_option("--run-log", logs, "Run log JSONL (repeatable)")->required();
  curve_cmd->add_option("--out", curve_out, "CSV path (stdout if omitted)");

  cellsift::service::Options so;
  std::string snapshot_dir;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/JSON labeling service");
  serve_cmd->add_option("--port", so.port);
  serve_cmd->add_option("--host", so.host);
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "Persist sessions after every label batch");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return run(ra);
    if (*inject_cmd) {
      check(cellsift_inject(clean.c_str(), inject_no_header ? 0 : 1, plan.c_str(), dirty_out.c_str(),
                            truth_out.c_str()));
      return kOk;
    }
    if (*gen_cmd) {
      check(cellsift_generate(scenario.c_str(), rows, gen_seed, dirty_out.c_str(), truth_out.c_str()));
      return kOk;
    }
    if (*curve_cmd) {
      std::vector<const char*> paths;
      for (const auto& l : logs) paths.push_back(l.c_str());
      char* out = nullptr;
      check(cellsift_convergence_csv(paths.data(), paths.size(), &out));
      const auto csv = take(out);
      if (curve_out.empty()) {
        std::cout << csv;
      } else {
        write_file(curve_out, csv);
      }
      return kOk;
    }
    if (*serve_cmd) {
      if (!snapshot_dir.empty()) so.snapshot_dir = snapshot_dir;
      cellsift::service::Server server(so);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << so.host << ":" << port << "\n";
      server.listen();
      g_server = nullptr;
      return kOk;
    }
  } catch (const Failure& f) {
    std::cerr << "cellsift: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "cellsift: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
