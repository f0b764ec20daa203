#ifndef DUALGUIDE_H
#define DUALGUIDE_H

/* Generated by cbindgen from dualguide-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum DgStatus {
  DG_OK = 0,
  DG_ERR_NULL_ARGUMENT = 1,
  DG_ERR_INVALID_ARGUMENT = 2,
  DG_ERR_IO = 3,
  DG_ERR_PARSE = 4,
  DG_ERR_BUILD = 5,
  DG_ERR_PANIC = 6,
} DgStatus;

/**
 * Alignment fill policy for `dg_index_build`.
 */
typedef enum DgAlignment {
  DG_ALIGN_ZERO = 0,
  DG_ALIGN_ONE = 1,
  DG_ALIGN_SCALED = 2,
} DgAlignment;

/**
 * Traversal algorithm selector for `dg_search`.
 */
typedef enum DgAlgorithm {
  DG_ALGO_MAXSCORE2GTI = 0,
  DG_ALGO_BMW2GTI = 1,
  DG_ALGO_EXHAUSTIVE = 2,
} DgAlgorithm;

/**
 * Opaque index handle.
 */
typedef struct DgIndex DgIndex;

/**
 * Opaque search-result handle.
 */
typedef struct DgResults DgResults;

/**
 * Search parameters; mirror the CLI flags.
 */
typedef struct DgSearchParams {
  double alpha;
  double beta;
  double gamma;
  size_t k;
  double factor_f;
  enum DgAlgorithm algorithm;
} DgSearchParams;

/**
 * Effort counters of the search that produced the results.
 */
typedef struct DgCounters {
  uint64_t docs_fully_scored;
  uint64_t docs_locally_pruned;
  uint64_t docs_globally_skipped;
  uint64_t postings_touched;
  uint64_t repartition_count;
  uint64_t blocks_opened;
} DgCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *dg_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *dg_version(void);

/**
 * Loads an index file into a new handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DgStatus dg_index_load(const char *path, struct DgIndex **out);

/**
 * Builds an index from a corpus file.
 *
 * # Safety
 * `corpus_path` must be a valid NUL-terminated string and `out` a valid
 * pointer.
 */
enum DgStatus dg_index_build(const char *corpus_path,
                             double bm25_k1,
                             double bm25_b,
                             uint32_t block_size,
                             enum DgAlignment alignment,
                             bool keep_learned_zero,
                             struct DgIndex **out);

/**
 * Writes the index to a file.
 *
 * # Safety
 * `index` must be a live handle and `path` a valid NUL-terminated string.
 */
enum DgStatus dg_index_save(const struct DgIndex *index, const char *path);

/**
 * Number of documents in the index; 0 for a null handle.
 */
uint32_t dg_index_num_docs(const struct DgIndex *index);

/**
 * Number of posting records in the index; 0 for a null handle.
 */
uint64_t dg_index_num_postings(const struct DgIndex *index);

/**
 * Releases an index handle; a null handle is a no-op.
 */
void dg_index_free(struct DgIndex *index);

/**
 * Runs one query. `terms` holds `num_terms` term ids; repetitions weight a
 * term. On success `out` receives a result handle.
 *
 * # Safety
 * `index` must be a live handle; `terms` must point to `num_terms` ids (or
 * be null when `num_terms` is 0); `out` must be a valid pointer.
 */
enum DgStatus dg_search(const struct DgIndex *index,
                        const uint32_t *terms,
                        size_t num_terms,
                        struct DgSearchParams params,
                        struct DgResults **out);

/**
 * Number of results in the handle; 0 for a null handle.
 */
size_t dg_results_len(const struct DgResults *results);

/**
 * Document id at `rank` (0-based); `u32::MAX` when out of range.
 */
uint32_t dg_results_doc(const struct DgResults *results, size_t rank);

/**
 * Score at `rank` (0-based); NaN when out of range.
 */
double dg_results_score(const struct DgResults *results, size_t rank);

/**
 * Copies the effort counters out of a result handle.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DgStatus dg_results_counters(const struct DgResults *results, struct DgCounters *out);

/**
 * Releases a result handle; a null handle is a no-op.
 */
void dg_results_free(struct DgResults *results);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALGUIDE_H */
