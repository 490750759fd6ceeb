#ifndef RUBER_H
#define RUBER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Nonzero values mirror the CLI exit codes where one applies.
typedef enum RuberStatus {
  RUBER_STATUS_OK = 0,
  RUBER_STATUS_NULL_POINTER = 1,
  RUBER_STATUS_INVALID_ARGUMENT = 2,
  RUBER_STATUS_IO = 3,
  RUBER_STATUS_NUMERICAL = 4,
  RUBER_STATUS_COMPATIBILITY = 5,
  RUBER_STATUS_INVALID_UTF8 = 6,
  RUBER_STATUS_PANIC = 7,
} RuberStatus;

typedef enum RuberBlend {
  RUBER_BLEND_MIN = 0,
  RUBER_BLEND_MAX = 1,
  RUBER_BLEND_GEOMETRIC = 2,
  RUBER_BLEND_ARITHMETIC = 3,
} RuberBlend;

// Word embeddings loaded from a text file.
typedef struct RuberEmbeddings RuberEmbeddings;

// A trained unreferenced scorer bound to the embeddings it reads.
typedef struct RuberScorer RuberScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ruber_version(void);

// Message for the most recent failure on this thread, or NULL if none.
// The pointer stays valid until the next failing call on the same thread.
const char *ruber_last_error_message(void);

// Loads a text embedding file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum RuberStatus ruber_embeddings_load(const char *path, struct RuberEmbeddings **out);

// # Safety
// `handle` must come from `ruber_embeddings_load` and not be used afterwards. NULL is ignored.
void ruber_embeddings_free(struct RuberEmbeddings *handle);

// # Safety
// `handle` and `out` must be valid pointers.
enum RuberStatus ruber_embeddings_dim(const struct RuberEmbeddings *handle, size_t *out);

// Vocabulary size, including the unknown-word entry.
//
// # Safety
// `handle` and `out` must be valid pointers.
enum RuberStatus ruber_embeddings_vocab_size(const struct RuberEmbeddings *handle, size_t *out);

// Loads a scorer checkpoint against `embeddings`. The scorer keeps its own
// copy, so `embeddings` may be freed afterwards.
//
// # Safety
// `path` must be a NUL-terminated string; `embeddings` and `out` valid pointers.
enum RuberStatus ruber_scorer_load(const char *path,
                                   const struct RuberEmbeddings *embeddings,
                                   bool allow_vocab_mismatch,
                                   struct RuberScorer **out);

// # Safety
// `handle` must come from `ruber_scorer_load` and not be used afterwards. NULL is ignored.
void ruber_scorer_free(struct RuberScorer *handle);

// Pooled-embedding cosine between whitespace-tokenized `groundtruth` and `candidate`.
//
// # Safety
// Strings must be NUL-terminated; `embeddings` and `out` valid pointers.
enum RuberStatus ruber_referenced_score(const struct RuberEmbeddings *embeddings,
                                        const char *groundtruth,
                                        const char *candidate,
                                        double *out);

// Learned relatedness of `reply` to `query`, in (0, 1).
//
// # Safety
// Strings must be NUL-terminated; `scorer` and `out` valid pointers.
enum RuberStatus ruber_unreferenced_score(const struct RuberScorer *scorer,
                                          const char *query,
                                          const char *reply,
                                          double *out);

// Sentence BLEU-`n`. Writes NaN when the candidate is shorter than `n`.
//
// # Safety
// Strings must be NUL-terminated; `out` a valid pointer.
enum RuberStatus ruber_bleu(const char *candidate, const char *reference, size_t n, double *out);

// # Safety
// Strings must be NUL-terminated; `out` a valid pointer.
enum RuberStatus ruber_rouge_l(const char *candidate, const char *reference, double *out);

// Min-max normalizes `len` values into `out`. `out_min` and `out_max` may be NULL.
//
// # Safety
// `values` and `out` must each point to `len` doubles; they may alias.
enum RuberStatus ruber_normalize(const double *values,
                                 size_t len,
                                 double *out,
                                 double *out_min,
                                 double *out_max);

// Blends two normalized scores in [0, 1]. `strategy` is a `RuberBlend` value.
//
// # Safety
// `out` must be a valid pointer.
enum RuberStatus ruber_blend(double referenced, double unreferenced, int32_t strategy, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUBER_H */
