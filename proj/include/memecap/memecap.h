/* Copyright 2026 The memecap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to the memecap caption toolkit.
 *
 * Every fallible call returns a memecap_status. On failure the message for
 * the calling thread is available from memecap_last_error() until the next
 * failing call on that thread. Handles are opaque and must be released with
 * their matching _free function; passing NULL to a _free function is a
 * no-op. Strings returned by the library stay valid for the lifetime of the
 * handle that owns them.
 */

#ifndef MEMECAP_MEMECAP_H_
#define MEMECAP_MEMECAP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MEMECAP_BUILDING_LIBRARY)
#define MEMECAP_API __declspec(dllexport)
#else
#define MEMECAP_API __declspec(dllimport)
#endif
#else
#define MEMECAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum memecap_status {
  MEMECAP_OK = 0,
  MEMECAP_ERR_VALIDATION = 1, /* bad argument or configuration */
  MEMECAP_ERR_IO = 2,         /* file missing, unreadable or unwritable */
  MEMECAP_ERR_NUMERIC = 3,    /* non-finite loss or value */
  MEMECAP_ERR_FORMAT = 4,     /* malformed file contents */
  MEMECAP_ERR_SHAPE = 5,      /* dimension mismatch */
  MEMECAP_ERR_RANGE = 6,      /* index outside a table */
  MEMECAP_ERR_INTERNAL = 7
} memecap_status;

typedef enum memecap_variant {
  MEMECAP_VARIANT_IMAGE_ONLY = 1,
  MEMECAP_VARIANT_GLOVE_AVERAGE = 2,
  MEMECAP_VARIANT_ATTENTION = 3
} memecap_variant;

typedef enum memecap_optimizer {
  MEMECAP_OPTIMIZER_SGD = 0,
  MEMECAP_OPTIMIZER_MOMENTUM = 1
} memecap_optimizer;

typedef enum memecap_decode_mode {
  MEMECAP_DECODE_GREEDY = 0,
  MEMECAP_DECODE_BEAM = 1,
  MEMECAP_DECODE_TEMPERATURE_BEAM = 2
} memecap_decode_mode;

MEMECAP_API const char* memecap_version(void);
MEMECAP_API const char* memecap_status_string(memecap_status status);
MEMECAP_API const char* memecap_last_error(void);

/* Dimension of stored image embeddings. */
MEMECAP_API size_t memecap_image_dim(void);

/* ---- Preprocessing ---------------------------------------------------- */

typedef struct memecap_preprocess_stats {
  size_t total;
  size_t kept;
  size_t removed;
  size_t vocab_size;
} memecap_preprocess_stats;

/* Reads a raw `image_id \t label \t caption` TSV and writes processed.tsv,
 * vocab.tsv and stats.tsv into out_dir (created if missing). stats may be
 * NULL. */
MEMECAP_API memecap_status memecap_preprocess(const char* raw_path,
                                              const char* out_dir,
                                              int min_count,
                                              memecap_preprocess_stats* stats);

/* ---- Image embeddings ------------------------------------------------- */

typedef struct memecap_images memecap_images;

MEMECAP_API memecap_status memecap_images_create(memecap_images** out);
MEMECAP_API memecap_status memecap_images_load(const char* path,
                                               memecap_images** out);
MEMECAP_API memecap_status memecap_images_save(const memecap_images* images,
                                               const char* path);
/* Adds or replaces `id`. dim must equal memecap_image_dim(). */
MEMECAP_API memecap_status memecap_images_put(memecap_images* images,
                                              const char* id,
                                              const float* values, size_t dim);
/* Copies the vector for `id` into out[0..dim). */
MEMECAP_API memecap_status memecap_images_get(const memecap_images* images,
                                              const char* id, float* out,
                                              size_t dim);
MEMECAP_API size_t memecap_images_count(const memecap_images* images);
/* NULL when index is out of range. */
MEMECAP_API const char* memecap_images_id(const memecap_images* images,
                                          size_t index);
MEMECAP_API void memecap_images_free(memecap_images* images);

/* Deterministic unit-norm stand-in embedding derived from raw bytes. */
MEMECAP_API memecap_status memecap_pseudo_embed(const void* data, size_t size,
                                                float* out, size_t dim);
MEMECAP_API memecap_status memecap_pseudo_embed_file(const char* path,
                                                     float* out, size_t dim);

/* ---- Training --------------------------------------------------------- */

typedef struct memecap_train_options {
  const char* data_path;       /* processed TSV */
  const char* vocab_path;      /* vocabulary TSV */
  const char* images_path;     /* image embedding file */
  const char* checkpoint_path; /* output */
  const char* glove_path;      /* optional; random embeddings when NULL */
  const char* eval_path;       /* optional; training set when NULL */
  const char* metrics_path;    /* optional per-epoch TSV */
  memecap_variant variant;
  size_t layers;
  size_t hidden;
  size_t embed_dim;
  int precision; /* 32 or 64 */
  memecap_optimizer optimizer;
  double momentum;
  double learning_rate;
  double lr_decay_factor;
  int lr_decay_every;
  size_t batch_size;
  int epochs;
  uint64_t seed;
  double clip_norm;
  int freeze_embeddings;
  size_t threads;
} memecap_train_options;

/* Defaults for `optimizer`; paths are set to NULL. */
MEMECAP_API void memecap_train_options_init(memecap_train_options* options,
                                            memecap_optimizer optimizer);

/* Returns MEMECAP_ERR_VALIDATION listing every problem at once. */
MEMECAP_API memecap_status memecap_train_options_validate(
    const memecap_train_options* options);

typedef void (*memecap_epoch_callback)(int epoch, double train_loss,
                                       double eval_perplexity,
                                       double learning_rate, void* user_data);

/* Trains and writes the checkpoint (and metrics when a path is given).
 * callback may be NULL. */
MEMECAP_API memecap_status memecap_train(const memecap_train_options* options,
                                         memecap_epoch_callback callback,
                                         void* user_data);

/* ---- Models and generation -------------------------------------------- */

typedef struct memecap_model memecap_model;

MEMECAP_API memecap_status memecap_model_load(const char* path,
                                              memecap_model** out);
MEMECAP_API void memecap_model_free(memecap_model* model);
MEMECAP_API memecap_variant memecap_model_variant(const memecap_model* model);
MEMECAP_API size_t memecap_model_layers(const memecap_model* model);
MEMECAP_API size_t memecap_model_hidden(const memecap_model* model);
MEMECAP_API size_t memecap_model_vocab_size(const memecap_model* model);
MEMECAP_API size_t memecap_model_image_dim(const memecap_model* model);
MEMECAP_API int memecap_model_precision(const memecap_model* model);

typedef struct memecap_decode_options {
  memecap_decode_mode mode;
  size_t k;
  double temperature;
  size_t top_m;
  size_t max_len;
  uint64_t seed;
  int length_normalize;
} memecap_decode_options;

MEMECAP_API void memecap_decode_options_init(memecap_decode_options* options);

typedef struct memecap_captions memecap_captions;

/* `label` may be NULL. image_dim must match the model. */
MEMECAP_API memecap_status memecap_generate(
    const memecap_model* model, const float* image, size_t image_dim,
    const char* label, const memecap_decode_options* options,
    memecap_captions** out);
MEMECAP_API size_t memecap_captions_count(const memecap_captions* captions);
MEMECAP_API const char* memecap_captions_text(const memecap_captions* captions,
                                              size_t index);
MEMECAP_API double memecap_captions_log_prob(const memecap_captions* captions,
                                             size_t index);
MEMECAP_API size_t memecap_captions_warning_count(
    const memecap_captions* captions);
MEMECAP_API const char* memecap_captions_warning(
    const memecap_captions* captions, size_t index);
MEMECAP_API void memecap_captions_free(memecap_captions* captions);

/* ---- Evaluation ------------------------------------------------------- */

typedef struct memecap_eval_options {
  const char* eval_path;   /* TSV scored for perplexity */
  const char* train_path;  /* TSV whose captions form the copy index */
  const char* images_path; /* image embedding file */
  const char* vocab_path;  /* optional; must match the checkpoint */
  double near_dup_threshold;
  memecap_decode_options decode; /* captions checked for % in data */
} memecap_eval_options;

typedef struct memecap_eval_report {
  double perplexity;
  double percent_in_data;
  double near_dup_threshold;
  size_t examples;
  size_t generated;
  size_t exact_copies;
  size_t near_copies;
} memecap_eval_report;

MEMECAP_API void memecap_eval_options_init(memecap_eval_options* options);

/* Perplexity of the eval set, plus % in data over the captions generated for
 * each distinct (image, label) pair of the eval set. */
MEMECAP_API memecap_status memecap_evaluate(const memecap_model* model,
                                            const memecap_eval_options* options,
                                            memecap_eval_report* report);

#ifdef __cplusplus
}
#endif

#endif /* MEMECAP_MEMECAP_H_ */
