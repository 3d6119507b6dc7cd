#ifndef ZEROSHOT_H
#define ZEROSHOT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Judgement codes for [`zs_threshold_sweep`].
 */
typedef enum ZsJudgement {
  ZS_JUDGEMENT_HIT = 0,
  ZS_JUDGEMENT_MISS = 1,
  ZS_JUDGEMENT_SKIP = 2,
} ZsJudgement;

/**
 * Result of every fallible call.
 */
typedef enum ZsStatus {
  ZS_STATUS_OK = 0,
  ZS_STATUS_NULL_POINTER = 1,
  ZS_STATUS_INVALID_ARGUMENT = 2,
  ZS_STATUS_DIMENSION_MISMATCH = 3,
  ZS_STATUS_ZERO_VECTOR = 4,
  ZS_STATUS_NOT_UNIT_NORM = 5,
  ZS_STATUS_MISSING_EMBEDDING = 6,
  ZS_STATUS_MALFORMED_INPUT = 7,
  ZS_STATUS_MISSING_VERDICT = 8,
  ZS_STATUS_IO = 9,
  ZS_STATUS_BUFFER_TOO_SMALL = 10,
  ZS_STATUS_PANIC = 11,
} ZsStatus;

/**
 * Opaque embedding store.
 */
typedef struct ZsEmbeddingStore ZsEmbeddingStore;

/**
 * Opaque label taxonomy.
 */
typedef struct ZsTaxonomy ZsTaxonomy;

/**
 * One threshold of a sweep. `ratio` is meaningful only when `has_ratio`.
 */
typedef struct ZsSweepRow {
  double threshold;
  uint64_t classified;
  uint64_t hits;
  double hit_rate;
  uint64_t errors;
  double error_rate;
  double ratio;
  bool has_ratio;
} ZsSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *zs_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *zs_last_error_message(void);

/**
 * Cosine similarity of two `len`-long vectors, clamped to [-1, 1].
 */
enum ZsStatus zs_cosine_similarity(const float *a, const float *b, size_t len, double *out);

/**
 * Softmax of `logits * scale`, written to `out` (same length).
 */
enum ZsStatus zs_softmax(const double *logits, size_t len, double scale, double *out);

/**
 * `w * p + (1 - w) * q` for probability vectors `p` and `q`.
 */
enum ZsStatus zs_convex_blend(const double *p, const double *q, size_t len, double w, double *out);

/**
 * Image distribution when its maximum reaches `gate`, otherwise the blend
 * with weight `w_image`. `used_text` may be NULL.
 */
enum ZsStatus zs_fuse_conditional(const double *p_img,
                                  const double *p_txt,
                                  size_t len,
                                  double w_image,
                                  double gate,
                                  double *out,
                                  bool *used_text);

/**
 * Expands `raw_name` with `template` (`"natural"`, `"raw"`, a pattern
 * containing `{label}`, or NULL for natural) into `buf`. `needed` receives
 * the prompt length without the terminator; when `cap` is too small nothing
 * is written and `ZS_STATUS_BUFFER_TOO_SMALL` is returned.
 */
enum ZsStatus zs_prompt_expand(const char *raw_name,
                               const char *template_,
                               char *buf,
                               size_t cap,
                               size_t *needed);

/**
 * Reads a ZSE1 embedding file. With `renormalize` off-norm records are
 * rescaled instead of rejected.
 */
enum ZsStatus zs_embeddings_read(const char *path, bool renormalize, struct ZsEmbeddingStore **out);

size_t zs_embeddings_len(const struct ZsEmbeddingStore *store);

size_t zs_embeddings_dim(const struct ZsEmbeddingStore *store);

/**
 * Borrows the vector stored under `id`; it stays valid until the store is
 * freed.
 */
enum ZsStatus zs_embeddings_get(const struct ZsEmbeddingStore *store,
                                const char *id,
                                const float **out);

void zs_embeddings_free(struct ZsEmbeddingStore *store);

/**
 * Loads a label list (one class per line) and expands its prompts.
 */
enum ZsStatus zs_taxonomy_load(const char *path, const char *template_, struct ZsTaxonomy **out);

/**
 * Attaches prompt embeddings, keyed by raw name or by prompt text. On
 * failure the taxonomy is left as it was.
 */
enum ZsStatus zs_taxonomy_attach(struct ZsTaxonomy *tax, const struct ZsEmbeddingStore *store);

size_t zs_taxonomy_len(const struct ZsTaxonomy *tax);

/**
 * Raw class name of class `index`, or NULL when out of range.
 */
const char *zs_taxonomy_label(const struct ZsTaxonomy *tax, size_t index);

/**
 * Prompt text of class `index`, or NULL when out of range.
 */
const char *zs_taxonomy_prompt(const struct ZsTaxonomy *tax, size_t index);

void zs_taxonomy_free(struct ZsTaxonomy *tax);

/**
 * Class distribution of one image embedding. `probs` must hold exactly
 * `zs_taxonomy_len(tax)` values.
 */
enum ZsStatus zs_classify(const struct ZsTaxonomy *tax,
                          const float *embedding,
                          size_t dim,
                          double scale,
                          double *probs,
                          size_t probs_len);

/**
 * Hit/error statistics of `n` reviewed items (top probability plus a
 * [`ZsJudgement`] code each) at `n_thresholds` thresholds. `rows` receives
 * one row per threshold.
 */
enum ZsStatus zs_threshold_sweep(const double *max_probs,
                                 const uint8_t *judgements,
                                 size_t n,
                                 const double *thresholds,
                                 size_t n_thresholds,
                                 struct ZsSweepRow *rows);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZEROSHOT_H */
