/* C interface to the log grouping library. Handles are opaque; every call
 * that can fail returns an lg_status and leaves a message for
 * lg_last_error(). Strings returned through char** are owned by the caller
 * and released with lg_string_free. */
#ifndef LOGGROUPER_H
#define LOGGROUPER_H

#include <stddef.h>

#if defined(_WIN32)
#define LG_API __declspec(dllexport)
#else
#define LG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lg_status {
  LG_OK = 0,
  LG_ERR_INVALID_ARGUMENT = 1,
  LG_ERR_PARSE = 2,
  LG_ERR_EMPTY = 3,
  LG_ERR_DEGENERATE = 4,
  LG_ERR_NOT_FOUND = 5,
  LG_ERR_EXISTS = 6,
  LG_ERR_CORRUPT = 7,
  LG_ERR_IO = 8,
  LG_ERR_UNAVAILABLE = 9,
  LG_ERR_NOT_READY = 10,
  LG_ERR_INTERNAL = 11
} lg_status;

typedef struct lg_records lg_records;
typedef struct lg_run lg_run;

LG_API const char* lg_version(void);
/* Message of the last failed call on this thread; "" after a success. */
LG_API const char* lg_last_error(void);
LG_API const char* lg_status_name(lg_status status);
LG_API void lg_string_free(char* s);

/* JSONL ingest schema. `dropped` (nullable) receives the number of records
 * filtered out by severity. */
LG_API lg_status lg_records_parse_jsonl(const char* data, size_t len, lg_records** out,
                                        size_t* dropped);
/* `rules` is the text of a rules file, NULL for the defaults. */
LG_API lg_status lg_records_parse_plaintext(const char* data, size_t len, const char* rules,
                                            const char* source, lg_records** out,
                                            size_t* dropped);
LG_API lg_status lg_records_load(const char* path, lg_records** out);
LG_API lg_status lg_records_save(const lg_records* records, const char* path);
LG_API size_t lg_records_size(const lg_records* records);
LG_API void lg_records_free(lg_records* records);

/* Windowing plus the full run matrix. `config_json` may be NULL. A run
 * whose combos all failed is still returned; check lg_run_status. */
LG_API lg_status lg_run_execute(const lg_records* records, const char* config_json,
                                lg_run** out);
/* "pending", "running", "done" or "failed"; static storage. */
LG_API const char* lg_run_status(const lg_run* run);
/* Writes the run into directory `dir`, which must not exist yet. */
LG_API lg_status lg_run_persist(const lg_run* run, const char* dir);
LG_API lg_status lg_run_load(const char* dir, lg_run** out);
/* format: "table", "json" or "csv". */
LG_API lg_status lg_run_report(const lg_run* run, const char* format, char** out);
/* "tfidf/raw/kmeans" style key and cluster count of the best combo. */
LG_API lg_status lg_run_best(const lg_run* run, char** combo, int* k);
/* name: "manifest", "report", "assignments" or "clouds". */
LG_API lg_status lg_run_artifact(const lg_run* run, const char* name, char** out);
LG_API void lg_run_free(lg_run* run);

/* Blocks serving the REST API until SIGINT or SIGTERM. `config_path` may be
 * NULL; environment overrides apply either way. */
LG_API lg_status lg_serve(const char* config_path);

#ifdef __cplusplus
}
#endif

#endif
