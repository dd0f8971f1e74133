#ifndef SLSH_H
#define SLSH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible function.
 */
typedef enum SlshStatus {
  SLSH_STATUS_OK = 0,
  SLSH_STATUS_NULL_POINTER = 1,
  SLSH_STATUS_PARSE = 2,
  SLSH_STATUS_VALIDATION = 3,
  SLSH_STATUS_SHAPE = 4,
  SLSH_STATUS_INSUFFICIENT_DATA = 5,
  SLSH_STATUS_CAPABILITY = 6,
  SLSH_STATUS_DEGENERATE = 7,
  SLSH_STATUS_FORMAT = 8,
  SLSH_STATUS_IO = 9,
  SLSH_STATUS_BUFFER_TOO_SMALL = 10,
  SLSH_STATUS_PANIC = 11,
} SlshStatus;

typedef enum SlshScheme {
  SLSH_SCHEME_SLSH = 0,
  SLSH_SCHEME_LSH = 1,
  SLSH_SCHEME_PCAH = 2,
} SlshScheme;

/**
 * Labeled row-major matrix of `f64`.
 */
typedef struct SlshDataset SlshDataset;

/**
 * Trained or baseline hash model with its stored preprocessing.
 */
typedef struct SlshModel SlshModel;

/**
 * Training parameters. Obtain defaults from [`slsh_fit_config_default`].
 */
typedef struct SlshFitConfig {
  enum SlshScheme scheme;
  /**
   * Cumulative contribution ratio kept by PCA, in (0, 1].
   */
  double pca_ratio;
  /**
   * Candidate hyperplanes generated before selection.
   */
  size_t pool_size;
  /**
   * Hyperplanes kept in the model.
   */
  size_t bits;
  size_t iterations;
  uint64_t seed;
} SlshFitConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *slsh_last_error(void);

/**
 * Number of `uint64_t` words holding a code of `bits` bits.
 */
size_t slsh_words_per_code(size_t bits);

/**
 * # Safety
 * `values` must point to `n_rows * n_dims` doubles and `labels` to `n_rows`
 * integers. `out` must be a valid pointer to a handle slot.
 */
enum SlshStatus slsh_dataset_new(const double *values,
                                 const int64_t *labels,
                                 size_t n_rows,
                                 size_t n_dims,
                                 struct SlshDataset **out);

/**
 * # Safety
 * `data` must be NULL or a handle from [`slsh_dataset_new`] not yet freed.
 */
void slsh_dataset_free(struct SlshDataset *data);

/**
 * # Safety
 * `data` must be a live dataset handle.
 */
size_t slsh_dataset_n_rows(const struct SlshDataset *data);

/**
 * # Safety
 * `data` must be a live dataset handle.
 */
size_t slsh_dataset_n_dims(const struct SlshDataset *data);

struct SlshFitConfig slsh_fit_config_default(void);

/**
 * Standardizes, projects and builds the configured scheme on `learning`.
 *
 * # Safety
 * `learning` and `config` must be valid; `out` must be a valid handle slot.
 */
enum SlshStatus slsh_model_fit(const struct SlshDataset *learning,
                               const struct SlshFitConfig *config,
                               struct SlshModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
 */
enum SlshStatus slsh_model_load(const char *path, struct SlshModel **out);

/**
 * # Safety
 * `model` must be a live model handle; `path` a NUL-terminated UTF-8 string.
 */
enum SlshStatus slsh_model_save(const struct SlshModel *model, const char *path);

/**
 * # Safety
 * `model` must be NULL or a model handle not yet freed.
 */
void slsh_model_free(struct SlshModel *model);

/**
 * Largest code width the model can produce.
 *
 * # Safety
 * `model` must be a live model handle.
 */
size_t slsh_model_capacity(const struct SlshModel *model);

/**
 * Raw feature dimension the model expects.
 *
 * # Safety
 * `model` must be a live model handle.
 */
size_t slsh_model_input_dims(const struct SlshModel *model);

/**
 * Encodes every row of `data` with the first `bits` selected hyperplanes
 * (`bits = 0` means the full capacity). Row `r` is written to
 * `out_words[r * w .. (r + 1) * w]` with `w = slsh_words_per_code(bits)`.
 *
 * # Safety
 * Handles must be live; `out_words` must hold `out_len` words.
 */
enum SlshStatus slsh_model_encode(const struct SlshModel *model,
                                  const struct SlshDataset *data,
                                  size_t bits,
                                  uint64_t *out_words,
                                  size_t out_len);

/**
 * Hamming distance between two packed codes of `bits` bits.
 *
 * # Safety
 * `a` and `b` must each hold `slsh_words_per_code(bits)` words.
 */
uint32_t slsh_hamming(const uint64_t *a, const uint64_t *b, size_t bits);

/**
 * Ranks `db` by Hamming distance to `query`, ascending with ties broken by
 * index, and writes the first `k` indices and distances.
 *
 * # Safety
 * `query` holds one code and `db` holds `n_db` codes of `bits` bits;
 * `out_indices` and `out_distances` hold `k` entries each.
 */
enum SlshStatus slsh_search(const uint64_t *query,
                            const uint64_t *db,
                            size_t n_db,
                            size_t bits,
                            size_t k,
                            size_t *out_indices,
                            uint32_t *out_distances);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLSH_H */
