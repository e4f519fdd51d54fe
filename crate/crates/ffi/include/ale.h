#ifndef ALE_H
#define ALE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AleStatus {
  ALE_STATUS_OK = 0,
  ALE_STATUS_NULL_POINTER = 1,
  ALE_STATUS_INVALID_UTF8 = 2,
  ALE_STATUS_INVALID_ARGUMENT = 3,
  ALE_STATUS_INVALID_MATRIX = 4,
  ALE_STATUS_PARSE_ERROR = 5,
  ALE_STATUS_DOMAIN_ERROR = 6,
  ALE_STATUS_OUT_OF_RANGE = 7,
  ALE_STATUS_PANIC = 99,
} AleStatus;

typedef enum AleFormat {
  ALE_FORMAT_CSV = 0,
  ALE_FORMAT_ALM_JSON = 1,
} AleFormat;

typedef struct AleMatrix AleMatrix;

typedef struct AleRanking AleRanking;

typedef struct AleSnapshot AleSnapshot;

typedef struct AleWeights AleWeights;

typedef struct AleConsistency {
  double lambda_max;
  double ci;
  double cr;
  double ri;
  uint32_t iterations;
  bool converged;
  /**
   * `cr` is at or below the warning threshold.
   */
  bool acceptable;
} AleConsistency;

typedef struct AleRankedRow {
  uint32_t rank;
  double score;
} AleRankedRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Engine version; static storage.
 */
const char *ale_version(void);

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *ale_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ale_string_free(char *s);

/**
 * Parses a matrix document (`n`, `labels`, and `upper` or `full`). Scale
 * and reciprocity are checked by [`ale_weights_compute`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_matrix` must be writable.
 */
enum AleStatus ale_matrix_from_json(const char *json, struct AleMatrix **out_matrix);

/**
 * Builds an `n`×`n` matrix from its `n(n-1)/2` upper-triangle judgments,
 * row-major; the lower triangle is filled with reciprocals.
 *
 * # Safety
 * `labels` must hold `n` strings and `upper` `n(n-1)/2` values.
 */
enum AleStatus ale_matrix_from_upper(size_t n,
                                     const char *const *labels,
                                     const double *upper,
                                     struct AleMatrix **out_matrix);

/**
 * # Safety
 * `m` must be null or a handle from this library, not yet freed.
 */
void ale_matrix_free(struct AleMatrix *m);

/**
 * Principal-eigenvector weights and consistency. `out_consistency` may be
 * null.
 *
 * # Safety
 * `m` must be a live matrix handle; `out_weights` must be writable.
 */
enum AleStatus ale_weights_compute(const struct AleMatrix *m,
                                   struct AleWeights **out_weights,
                                   struct AleConsistency *out_consistency);

/**
 * Shipped weights for phase 1 to 4.
 *
 * # Safety
 * `out_weights` must be writable.
 */
enum AleStatus ale_weights_preset(uint8_t phase, struct AleWeights **out_weights);

/**
 * # Safety
 * `w` must be null or a live weights handle.
 */
size_t ale_weights_len(const struct AleWeights *w);

/**
 * # Safety
 * `w` must be a live weights handle; `out_value` must be writable.
 */
enum AleStatus ale_weights_get(const struct AleWeights *w, size_t index, double *out_value);

/**
 * Criterion label at `index`, or null when out of range. Borrowed from `w`.
 *
 * # Safety
 * `w` must be null or a live weights handle.
 */
const char *ale_weights_label(const struct AleWeights *w, size_t index);

/**
 * # Safety
 * `w` must be null or a handle from this library, not yet freed.
 */
void ale_weights_free(struct AleWeights *w);

/**
 * Parses snapshot text in the given format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out_snapshot` must be writable.
 */
enum AleStatus ale_snapshot_parse(const char *text,
                                  enum AleFormat format,
                                  struct AleSnapshot **out_snapshot);

/**
 * Reads a `.csv` or `.json` snapshot file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_snapshot` must be writable.
 */
enum AleStatus ale_snapshot_load(const char *path, struct AleSnapshot **out_snapshot);

/**
 * # Safety
 * `s` must be null or a live snapshot handle.
 */
size_t ale_snapshot_len(const struct AleSnapshot *s);

/**
 * # Safety
 * `s` must be null or a handle from this library, not yet freed.
 */
void ale_snapshot_free(struct AleSnapshot *s);

/**
 * Scores a snapshot.
 *
 * Give either `as_of` (`YYYY-MM-DD`, phase derived from the articles'
 * publication month) or a `phase` from 1 to 4; pass null and 0 to score at
 * the snapshot's own date. `matrix` may be null to use the shipped weights.
 *
 * # Safety
 * `snapshot` must be live; `matrix` null or live; `out_ranking` writable.
 */
enum AleStatus ale_score(const struct AleSnapshot *snapshot,
                         const char *as_of,
                         uint8_t phase,
                         const struct AleMatrix *matrix,
                         struct AleRanking **out_ranking);

/**
 * # Safety
 * `r` must be null or a live ranking handle.
 */
size_t ale_ranking_len(const struct AleRanking *r);

/**
 * Phase used for scoring, or 0 when none was recorded.
 *
 * # Safety
 * `r` must be null or a live ranking handle.
 */
uint8_t ale_ranking_phase(const struct AleRanking *r);

/**
 * Row `index` in rank order.
 *
 * # Safety
 * `r` must be a live ranking handle; `out_row` must be writable.
 */
enum AleStatus ale_ranking_row(const struct AleRanking *r,
                               size_t index,
                               struct AleRankedRow *out_row);

/**
 * DOI of row `index`, or null when out of range. Borrowed from `r`.
 *
 * # Safety
 * `r` must be null or a live ranking handle.
 */
const char *ale_ranking_doi(const struct AleRanking *r, size_t index);

/**
 * The full ranking as JSON, the same shape the CLI and service emit.
 * Release with `ale_string_free`.
 *
 * # Safety
 * `r` must be a live ranking handle; `out_json` must be writable.
 */
enum AleStatus ale_ranking_to_json(const struct AleRanking *r, char **out_json);

/**
 * # Safety
 * `r` must be null or a handle from this library, not yet freed.
 */
void ale_ranking_free(struct AleRanking *r);

/**
 * Min-max normalizes `len` values from `values` into `out_values`; a
 * constant column maps to zeros.
 *
 * # Safety
 * `values` and `out_values` must each hold `len` doubles.
 */
enum AleStatus ale_normalize_column(const double *values, size_t len, double *out_values);

/**
 * Phase (1 to 4) of an article published in `year`-`month` as of the
 * `YYYY-MM-DD` date, under the default schedule.
 *
 * # Safety
 * `as_of` must be a NUL-terminated string; `out_phase` must be writable.
 */
enum AleStatus ale_determine_phase(int32_t year,
                                   uint32_t month,
                                   const char *as_of,
                                   uint8_t *out_phase);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALE_H */
