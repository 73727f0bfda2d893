#ifndef TSCLUST_H
#define TSCLUST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TscMeasure {
  TSC_MEASURE_EUCLIDEAN = 0,
  TSC_MEASURE_COR = 1,
  TSC_MEASURE_CORT = 2,
  TSC_MEASURE_DTW = 3,
  TSC_MEASURE_CID = 4,
} TscMeasure;

// Result code of every fallible call.
typedef enum TscStatus {
  TSC_STATUS_OK = 0,
  TSC_STATUS_NULL_POINTER = 1,
  TSC_STATUS_INVALID_ARGUMENT = 2,
  TSC_STATUS_LENGTH_MISMATCH = 3,
  // Input the measure or index cannot handle, such as a constant series.
  TSC_STATUS_DEGENERATE = 4,
  TSC_STATUS_BAD_K = 5,
  TSC_STATUS_OUT_OF_RANGE = 6,
  TSC_STATUS_PANIC = 99,
} TscStatus;

// Opaque Ward dendrogram.
typedef struct TscDendrogram TscDendrogram;

// Opaque dissimilarity matrix.
typedef struct TscMatrix TscMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *tsc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tsc_version(void);

// Dissimilarity between two series of equal length `n` (DTW also accepts
// them), with default parameters.
//
// # Safety
// `x` and `y` must point to `n` readable doubles; `result` must be writable.
enum TscStatus tsc_distance(enum TscMeasure measure,
                            const double *x,
                            const double *y,
                            size_t n,
                            double *result);

// Dynamic time warping between series of possibly different lengths.
//
// # Safety
// `x` and `y` must point to `nx` and `ny` readable doubles.
enum TscStatus tsc_dtw(const double *x, size_t nx, const double *y, size_t ny, double *result);

// Complexity-invariant distance with an explicit complexity floor `eps`.
//
// # Safety
// `x` and `y` must point to `n` readable doubles.
enum TscStatus tsc_cid(const double *x, const double *y, size_t n, double eps, double *result);

// Temporal-correlation dissimilarity with tuning parameter `k`.
//
// # Safety
// `x` and `y` must point to `n` readable doubles.
enum TscStatus tsc_cort(const double *x, const double *y, size_t n, double k, double *result);

// Pairwise matrix of `n_series` row-major series of `length` values each.
//
// # Safety
// `values` must point to `n_series * length` doubles; `matrix` must be writable.
enum TscStatus tsc_matrix_compute(const double *values,
                                  size_t n_series,
                                  size_t length,
                                  enum TscMeasure measure,
                                  struct TscMatrix **matrix);

// Wraps a dense symmetric `size * size` row-major matrix with zero diagonal.
//
// # Safety
// `entries` must point to `size * size` doubles; `matrix` must be writable.
enum TscStatus tsc_matrix_from_dense(const double *entries, size_t size, struct TscMatrix **matrix);

// Number of rows; 0 for a null handle.
//
// # Safety
// `matrix` must be null or a live handle.
size_t tsc_matrix_size(const struct TscMatrix *matrix);

// # Safety
// `matrix` must be a live handle and `result` writable.
enum TscStatus tsc_matrix_get(const struct TscMatrix *matrix, size_t i, size_t j, double *result);

// # Safety
// `matrix` must be null or a handle not yet freed.
void tsc_matrix_free(struct TscMatrix *matrix);

// Ward agglomerative clustering of a matrix.
//
// # Safety
// `matrix` must be a live handle and `dendrogram` writable.
enum TscStatus tsc_ward(const struct TscMatrix *matrix, struct TscDendrogram **dendrogram);

// Number of merges (leaves minus one); 0 for a null handle.
//
// # Safety
// `dendrogram` must be null or a live handle.
size_t tsc_dendrogram_merge_count(const struct TscDendrogram *dendrogram);

// Merge `index` (0-based). Children use signed ids: leaves are `-1..=-K`
// and earlier merges `1..`.
//
// # Safety
// `dendrogram` must be a live handle; every output pointer must be writable.
enum TscStatus tsc_dendrogram_merge(const struct TscDendrogram *dendrogram,
                                    size_t index,
                                    int64_t *left,
                                    int64_t *right,
                                    double *height,
                                    size_t *size);

// Cuts into `k` clusters, writing labels `1..=k` for every leaf.
//
// # Safety
// `labels` must point to room for one `size_t` per leaf.
enum TscStatus tsc_dendrogram_cut(const struct TscDendrogram *dendrogram,
                                  size_t k,
                                  size_t *labels,
                                  size_t n_labels);

// # Safety
// `dendrogram` must be null or a handle not yet freed.
void tsc_dendrogram_free(struct TscDendrogram *dendrogram);

// Average silhouette width of a labelling. Labels are arbitrary cluster keys.
//
// # Safety
// `labels` must point to one value per matrix row.
enum TscStatus tsc_silhouette(const struct TscMatrix *matrix,
                              const size_t *labels,
                              size_t n,
                              double *result);

// Adjusted Rand index between two labellings of `n` items.
//
// # Safety
// `a` and `b` must point to `n` values each.
enum TscStatus tsc_adjusted_rand(const size_t *a, const size_t *b, size_t n, double *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSCLUST_H */
