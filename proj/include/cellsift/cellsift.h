/* C interface to the cellsift error-detection engine.
 *
 * Sessions are opaque handles. Every call returns a status code; on failure a
 * message for the calling thread is available from cellsift_last_error().
 * Strings returned through char** out-parameters are owned by the caller and
 * released with cellsift_string_free(). All text is UTF-8 JSON unless noted.
 */
#ifndef CELLSIFT_H
#define CELLSIFT_H

#include <stddef.h>

#if defined(_WIN32)
#define CELLSIFT_API __declspec(dllexport)
#else
#define CELLSIFT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cellsift_status {
  CELLSIFT_OK = 0,
  CELLSIFT_E_IO = 1,
  CELLSIFT_E_RAGGED_ROWS = 2,
  CELLSIFT_E_EMPTY_TABLE = 3,
  CELLSIFT_E_SHAPE_MISMATCH = 4,
  CELLSIFT_E_OUT_OF_BOUNDS = 5,
  CELLSIFT_E_DECODE = 6,
  CELLSIFT_E_VERSION_MISMATCH = 7,
  CELLSIFT_E_LENGTH_DRIFT = 8,
  CELLSIFT_E_BAD_PROBABILITY = 9,
  CELLSIFT_E_UNKNOWN_TOKEN = 10,
  CELLSIFT_E_FEATURE_LENGTH_MISMATCH = 11,
  CELLSIFT_E_NOT_TRAINED = 12,
  CELLSIFT_E_BUDGET_EXHAUSTED = 13,
  CELLSIFT_E_NO_SELECTABLE_COLUMN = 14,
  CELLSIFT_E_COLUMN_EXHAUSTED = 15,
  CELLSIFT_E_LABEL_MISMATCH = 16,
  CELLSIFT_E_BAD_PLAN = 17,
  CELLSIFT_E_EMPTY_LOG = 18,
  CELLSIFT_E_CONFIG = 19,
  CELLSIFT_E_INTERNAL = 20,
  CELLSIFT_E_INVALID_ARGUMENT = 21
} cellsift_status;

typedef struct cellsift_session cellsift_session;

CELLSIFT_API const char* cellsift_version(void);
/* Short name of a status, e.g. "LabelMismatch". */
CELLSIFT_API const char* cellsift_status_name(cellsift_status status);
/* Message of the last failed call on this thread; "" if none. */
CELLSIFT_API const char* cellsift_last_error(void);
CELLSIFT_API void cellsift_string_free(char* s);
/* Worker threads for training; 0 means hardware concurrency. */
CELLSIFT_API void cellsift_set_threads(unsigned n);

/* request: {"data": path | "csv": text, "ground_truth": path | "ground_truth_csv": text,
 *           "has_header": bool, "config": {...session config...}} */
CELLSIFT_API cellsift_status cellsift_session_create(const char* request, cellsift_session** out);
/* Restores a snapshot; the request supplies the same table (and optional ground truth). */
CELLSIFT_API cellsift_status cellsift_session_restore(const char* snapshot_path, const char* request,
                                                      cellsift_session** out);
CELLSIFT_API void cellsift_session_destroy(cellsift_session* session);

CELLSIFT_API cellsift_status cellsift_session_batch(cellsift_session* session, char** out);
/* labels: {"labels": [{"row", "col", "label": "erroneous"|"correct"}]}; out: iteration summary */
CELLSIFT_API cellsift_status cellsift_session_submit(cellsift_session* session, const char* labels, char** out);
CELLSIFT_API cellsift_status cellsift_session_oracle_labels(cellsift_session* session, char** out);
/* Answers every remaining batch from ground truth. */
CELLSIFT_API cellsift_status cellsift_session_run_oracle(cellsift_session* session);
CELLSIFT_API cellsift_status cellsift_session_status(cellsift_session* session, char** out);
CELLSIFT_API cellsift_status cellsift_session_report(cellsift_session* session, char** out);
CELLSIFT_API cellsift_status cellsift_session_run_log(cellsift_session* session, char** out);
CELLSIFT_API cellsift_status cellsift_session_explain(cellsift_session* session, size_t row, size_t col, char** out);
CELLSIFT_API cellsift_status cellsift_session_result(cellsift_session* session, char** out);
CELLSIFT_API cellsift_status cellsift_session_feature_names(cellsift_session* session, size_t col, char** out);
/* finished: 1 once the budget is spent or nothing is left to select. */
CELLSIFT_API cellsift_status cellsift_session_finished(cellsift_session* session, int* finished);
CELLSIFT_API cellsift_status cellsift_session_save(cellsift_session* session, const char* path);
/* JSONL, one label per line. */
CELLSIFT_API cellsift_status cellsift_session_export_labels(cellsift_session* session, const char* path);

/* Writes the dirty table and its ground truth as CSV. */
CELLSIFT_API cellsift_status cellsift_inject(const char* clean_path, int has_header, const char* plan_path,
                                             const char* dirty_path, const char* truth_path);
/* Writes a synthetic benchmark: scenario is "convergence", "heterogeneous", "format" or "correlated_pair". */
CELLSIFT_API cellsift_status cellsift_generate(const char* scenario, size_t rows, unsigned long long seed,
                                               const char* dirty_path, const char* truth_path);
/* Aggregates run logs (JSONL files) into "labels_used,mean_f1,std_f1,mean_p,mean_r" CSV. */
CELLSIFT_API cellsift_status cellsift_convergence_csv(const char* const* run_log_paths, size_t n, char** out);

#ifdef __cplusplus
}
#endif

#endif
