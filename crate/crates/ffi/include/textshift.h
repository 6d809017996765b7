#ifndef TEXTSHIFT_H
#define TEXTSHIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_ARGUMENT = 1,
  TS_STATUS_INVALID_UTF8 = 2,
  TS_STATUS_IO = 3,
  TS_STATUS_PARSE = 4,
  TS_STATUS_INVALID_INPUT = 5,
  TS_STATUS_INTERNAL = 6,
} TsStatus;

/**
 * Opaque word-embedding store.
 */
typedef struct TsEmbeddings TsEmbeddings;

/**
 * Opaque trained classifier.
 */
typedef struct TsModel TsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null.
 *
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *ts_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ts_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer returned through an `out` parameter of this
 * library that has not been freed yet.
 */
void ts_string_free(char *s);

/**
 * Loads a model JSON file written by `textshift train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_model_load(const char *path, struct TsModel **out);

/**
 * Builds a model from the JSON text of a model file.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_model_from_json(const char *json, struct TsModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from `ts_model_load`/`ts_model_from_json`
 * that has not been freed yet.
 */
void ts_model_free(struct TsModel *model);

/**
 * Class probabilities of `text` and the predicted class (0 or 1).
 *
 * # Safety
 * `model` must be a live handle, `text` a NUL-terminated string and the
 * three output pointers valid.
 */
enum TsStatus ts_model_predict(const struct TsModel *model,
                               const char *text,
                               double *out_p0,
                               double *out_p1,
                               uint8_t *out_class);

/**
 * Number of predictions this model has served, across all callers.
 *
 * # Safety
 * `model` must be null or a live handle; null yields 0.
 */
uint64_t ts_model_query_count(const struct TsModel *model);

/**
 * Loads a GloVe-format text store (`.gz` accepted).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_embeddings_load(const char *path, struct TsEmbeddings **out);

/**
 * Releases an embedding store. Null is ignored.
 *
 * # Safety
 * `store` must be null or a handle from `ts_embeddings_load` that has not
 * been freed yet.
 */
void ts_embeddings_free(struct TsEmbeddings *store);

/**
 * Number of words in the store; 0 for null.
 *
 * # Safety
 * `store` must be null or a live handle.
 */
size_t ts_embeddings_len(const struct TsEmbeddings *store);

/**
 * Up to `k` neighbors of `word` with cosine at least `min_sim`, as a JSON
 * array of `[word, similarity]` pairs.
 *
 * # Safety
 * `store` must be a live handle, `word` a NUL-terminated string and
 * `out_json` a valid pointer.
 */
enum TsStatus ts_embeddings_neighbors(const struct TsEmbeddings *store,
                                      const char *word,
                                      size_t k,
                                      double min_sim,
                                      char **out_json);

/**
 * Explains `text` with a local surrogate; returns the explanation as JSON.
 *
 * `config_json` holds explanation settings (`num_samples`, `num_features`,
 * `kernel_width`, `ridge_lambda`, `seed`, `target_class`); null uses the
 * defaults.
 *
 * # Safety
 * `model` must be a live handle, `text` a NUL-terminated string,
 * `config_json` null or NUL-terminated, and `out_json` a valid pointer.
 */
enum TsStatus ts_explain(const struct TsModel *model,
                         const char *text,
                         const char *config_json,
                         char **out_json);

/**
 * Runs the greedy substitution attack on `text` with true label
 * `truth_label`; returns the attack result as JSON.
 *
 * `config_json` holds attack settings; null uses the defaults.
 *
 * # Safety
 * `model` and `store` must be live handles, `text` a NUL-terminated
 * string, `config_json` null or NUL-terminated, and `out_json` a valid
 * pointer.
 */
enum TsStatus ts_attack(const struct TsModel *model,
                        const struct TsEmbeddings *store,
                        const char *text,
                        uint8_t truth_label,
                        const char *config_json,
                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEXTSHIFT_H */
