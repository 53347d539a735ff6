#ifndef MMI_LAB_H
#define MMI_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How random distributions are drawn (passed as `uint32_t`).
 */
typedef enum MmiSampling {
  MMI_SAMPLING_SIMPLEX = 0,
  MMI_SAMPLING_CUBE = 1,
} MmiSampling;

typedef enum MmiStatus {
  MMI_STATUS_OK = 0,
  MMI_STATUS_NULL_POINTER = 1,
  MMI_STATUS_INVALID_ARGUMENT = 2,
  MMI_STATUS_INDEX_OUT_OF_RANGE = 3,
  MMI_STATUS_INVALID_MATRIX = 4,
  MMI_STATUS_FORMAT = 5,
  MMI_STATUS_DATA = 6,
  MMI_STATUS_BUFFER_TOO_SMALL = 7,
  MMI_STATUS_IO = 8,
  MMI_STATUS_PANIC = 9,
} MmiStatus;

/**
 * Which coincidence table to compute (passed as `uint32_t`).
 */
typedef enum MmiTable {
  MMI_TABLE_QUANTUM = 0,
  MMI_TABLE_CLASSICAL = 1,
  /**
   * `V * Quantum + (1 - V) * Classical`.
   */
  MMI_TABLE_MIXTURE = 2,
} MmiTable;

typedef struct MmiMatrix MmiMatrix;

typedef struct MmiStream MmiStream;

/**
 * Summary of a Monte-Carlo similarity distribution. `raw` is NaN when the
 * input has no unresampled similarity.
 */
typedef struct MmiSimilarity {
  double mode;
  double hpd_low;
  double hpd_high;
  double mean;
  double raw;
  uint64_t n_trials;
} MmiSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mmi_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t mmi_last_error_message(char *buf, size_t len);

/**
 * Number of unordered output pairs for `n_modes` outputs.
 */
size_t mmi_pair_count(size_t n_modes);

/**
 * The characterized 4x4 chip shipped with the library.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum MmiStatus mmi_matrix_measured_chip(struct MmiMatrix **out);

/**
 * Parses a matrix from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum MmiStatus mmi_matrix_from_json(const char *json, struct MmiMatrix **out);

/**
 * Builds a matrix from row-major real and imaginary parts (`n_modes^2`
 * values each), where entry `[i * n_modes + k]` maps input `i` to output `k`.
 *
 * # Safety
 * `re` and `im` must each hold `n_modes * n_modes` doubles; `out` valid for
 * one pointer write.
 */
enum MmiStatus mmi_matrix_from_parts(size_t n_modes,
                                     const double *re,
                                     const double *im,
                                     struct MmiMatrix **out);

/**
 * # Safety
 * `matrix` must be null or a live handle.
 */
size_t mmi_matrix_n_modes(const struct MmiMatrix *matrix);

/**
 * # Safety
 * `matrix` must be null or a handle not yet freed.
 */
void mmi_matrix_free(struct MmiMatrix *matrix);

/**
 * Coincidence table for photons entering inputs `i` and `j`, written to
 * `out` in pair order. `visibility` is only used by the mixture, which is
 * always renormalized.
 *
 * # Safety
 * `matrix` must be a live handle; `out` must hold `len` doubles.
 */
enum MmiStatus mmi_coincidence_table(const struct MmiMatrix *matrix,
                                     size_t i,
                                     size_t j,
                                     uint32_t table,
                                     bool renormalize,
                                     double visibility,
                                     double *out,
                                     size_t len);

/**
 * Normalized classical fidelity of two non-negative vectors.
 *
 * # Safety
 * `p` and `q` must each hold `len` doubles; `out` valid for one write.
 */
enum MmiStatus mmi_similarity(const double *p, const double *q, size_t len, double *out);

/**
 * Similarity distribution of Poisson-resampled `counts` against `theory`.
 *
 * # Safety
 * `counts` and `theory` must each hold `len` doubles; `out` valid for one write.
 */
enum MmiStatus mmi_poisson_mc_similarity(const double *counts,
                                         const double *theory,
                                         size_t len,
                                         size_t trials,
                                         uint64_t seed,
                                         struct MmiSimilarity *out);

/**
 * Similarity distribution of random `dims`-dimensional distributions against
 * `theory`, or against a second random distribution when `theory` is null.
 * With `exceed_from` finite, `exceedance` receives the fraction of samples
 * at or above it.
 *
 * # Safety
 * `theory` must be null or hold `dims` doubles; `out` valid for one write;
 * `exceedance` null or valid for one write.
 */
enum MmiStatus mmi_random_baseline(const double *theory,
                                   size_t dims,
                                   uint32_t sampling,
                                   size_t trials,
                                   uint64_t seed,
                                   double exceed_from,
                                   struct MmiSimilarity *out,
                                   double *exceedance);

/**
 * Shortest interval holding `mass` of `samples` (any order).
 *
 * # Safety
 * `samples` must hold `len` doubles; `low` and `high` valid for one write.
 */
enum MmiStatus mmi_hpd_interval(const double *samples,
                                size_t len,
                                double mass,
                                double *low,
                                double *high);

/**
 * Reads a binary or CSV time-tag file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum MmiStatus mmi_stream_read(const char *path, struct MmiStream **out);

/**
 * Parses a binary time-tag payload.
 *
 * # Safety
 * `bytes` must hold `len` bytes; `out` valid for one pointer write.
 */
enum MmiStatus mmi_stream_parse(const uint8_t *bytes, size_t len, struct MmiStream **out);

/**
 * # Safety
 * `stream` must be null or a live handle.
 */
size_t mmi_stream_len(const struct MmiStream *stream);

/**
 * # Safety
 * `stream` must be null or a live handle.
 */
uint16_t mmi_stream_n_channels(const struct MmiStream *stream);

/**
 * # Safety
 * `stream` must be null or a handle not yet freed.
 */
void mmi_stream_free(struct MmiStream *stream);

/**
 * Pairs detections within `window` ns (after an offset of `offset_cycles`
 * duty cycles) and writes per-pair counts in pair order for the stream's
 * channels. `n_events` receives the number of coincidences.
 *
 * # Safety
 * `stream` must be a live handle; `counts` must hold `len` doubles;
 * `n_events` null or valid for one write.
 */
enum MmiStatus mmi_extract_coincidences(const struct MmiStream *stream,
                                        double window,
                                        uint32_t offset_cycles,
                                        double duty_cycle,
                                        double *counts,
                                        size_t len,
                                        uint64_t *n_events);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMI_LAB_H */
