/*
 * Copyright 2026 The Lesionkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
/*
 * C interface to lesionkit. Objects are opaque handles created by
 * lesion_*_create / _load / _read functions and released with the matching
 * _destroy function (which accepts NULL). Every function returns LESION_OK
 * (0) or a negative LESION_ERROR_* code; the message of the most recent
 * failure on the calling thread is available from lesion_last_error().
 *
 * Functions that produce text take a caller buffer and a length in/out
 * parameter: on entry *out_len is the buffer capacity, on return it holds
 * the required size including the terminating NUL. A buffer that is too
 * small (or NULL) yields LESION_ERROR_INSUFFICIENT_BUFFER.
 */

#ifndef LESION_LESION_H_
#define LESION_LESION_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LESION_BUILDING_LIBRARY)
#    define LESION_API __declspec(dllexport)
#  else
#    define LESION_API __declspec(dllimport)
#  endif
#else
#  define LESION_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define LESION_API_VERSION 1
#define LESION_NUM_CLASSES 8

enum lesion_status {
    LESION_OK = 0,
    LESION_ERROR_INVALID_ARGUMENT = -1,
    LESION_ERROR_IO = -2,
    LESION_ERROR_CROP_TOO_LARGE = -3,
    LESION_ERROR_BAD_HEADER = -4,
    LESION_ERROR_NOT_ONE_HOT = -5,
    LESION_ERROR_DUPLICATE_ID = -6,
    LESION_ERROR_ZERO_CLASS_COUNT = -7,
    LESION_ERROR_NO_SAMPLES = -8,
    LESION_ERROR_SHAPE_MISMATCH = -9,
    LESION_ERROR_NON_FINITE_INPUT = -10,
    LESION_ERROR_EMPTY_TRAINING = -11,
    LESION_ERROR_MISSING_IMAGE_FILE = -12,
    LESION_ERROR_CORRUPT_CHECKPOINT = -13,
    LESION_ERROR_LENGTH_MISMATCH = -14,
    LESION_ERROR_EMPTY = -15,
    LESION_ERROR_ID_MISMATCH = -16,
    LESION_ERROR_BAD_ROW = -17,
    LESION_ERROR_NOT_NORMALIZED = -18,
    LESION_ERROR_CONFIG = -19,
    LESION_ERROR_IMAGE_DECODE = -20,

    LESION_ERROR_NULL_POINTER = -50,
    LESION_ERROR_INVALID_OBJECT = -51,
    LESION_ERROR_INSUFFICIENT_BUFFER = -52,
    LESION_ERROR_OUT_OF_MEMORY = -53,
    LESION_ERROR_UNKNOWN = -99
};

typedef struct lesion_config_struct* lesion_config_t;
typedef struct lesion_manifest_struct* lesion_manifest_t;
typedef struct lesion_split_struct* lesion_split_t;
typedef struct lesion_checkpoint_struct* lesion_checkpoint_t;
typedef struct lesion_predictions_struct* lesion_predictions_t;
typedef struct lesion_report_struct* lesion_report_t;

/* Library ----------------------------------------------------------------- */

LESION_API uint32_t lesion_api_version(void);
/* Symbolic name of a status code, e.g. "CropTooLarge". Never NULL. */
LESION_API const char* lesion_error_name(int status);
/* Message of the last failure on this thread; "" if none. */
LESION_API const char* lesion_last_error(void);
/* Class name for index 0..7 in MEL,NV,BCC,AK,BKL,DF,VASC,SCC order, or NULL. */
LESION_API const char* lesion_class_name(int index);

/* Receives warnings (renormalized rows, degenerate splits) and per-epoch
 * training progress. Process-wide; pass NULL to disable. */
typedef void (*lesion_message_fn)(const char* message, void* user);
LESION_API void lesion_set_message_callback(lesion_message_fn fn, void* user);

/* Configuration ------------------------------------------------------------ */

LESION_API int lesion_config_create(lesion_config_t* out);
LESION_API int lesion_config_destroy(lesion_config_t cfg);
/* Merges a flat JSON object. Unknown keys fail with LESION_ERROR_CONFIG. */
LESION_API int lesion_config_merge_file(lesion_config_t cfg, const char* path);
/* value is JSON text ("0.5", "true", "\"balanced\"") or a bare string. */
LESION_API int lesion_config_set(lesion_config_t cfg, const char* key, const char* value);
LESION_API int lesion_config_validate(lesion_config_t cfg);
LESION_API int lesion_config_to_json(lesion_config_t cfg, char* out, size_t* out_len);
LESION_API int lesion_config_seed(lesion_config_t cfg, uint64_t* seed);
LESION_API int lesion_config_val_frac(lesion_config_t cfg, double* val_frac);
LESION_API int lesion_config_limit(lesion_config_t cfg, size_t* limit);

/* Manifests ---------------------------------------------------------------- */

/* Ground-truth CSV with header image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC. Image
 * files are resolved against image_dir (may be NULL or ""). */
LESION_API int lesion_manifest_load(lesion_manifest_t* out, const char* csv_path, const char* image_dir);
LESION_API int lesion_manifest_destroy(lesion_manifest_t m);
LESION_API int lesion_manifest_size(lesion_manifest_t m, size_t* n);
LESION_API int lesion_manifest_class_counts(lesion_manifest_t m, uint64_t counts[LESION_NUM_CLASSES]);
/* Stratified subsample of at most `limit` rows. */
LESION_API int lesion_manifest_limit(lesion_manifest_t m, size_t limit, uint64_t seed, lesion_manifest_t* out);

/* Class weights from per-class counts. mode: "min_over_count", "literal" or
 * "uniform". */
LESION_API int lesion_class_weights(const uint64_t counts[LESION_NUM_CLASSES], const char* mode,
                                    double weights[LESION_NUM_CLASSES]);

/* Splits ------------------------------------------------------------------- */

LESION_API int lesion_split_create(lesion_manifest_t m, double val_frac, uint64_t seed, lesion_split_t* out);
/* Applies an `image,subset` CSV to a manifest. */
LESION_API int lesion_split_load(lesion_manifest_t m, const char* splits_csv_path, lesion_split_t* out);
LESION_API int lesion_split_destroy(lesion_split_t s);
/* Writes `image,subset` rows in the order of `source`. */
LESION_API int lesion_split_write(lesion_split_t s, lesion_manifest_t source, const char* path);
LESION_API int lesion_split_summary(lesion_split_t s, char* out, size_t* out_len);
/* which: 0 = training subset, 1 = validation subset. */
LESION_API int lesion_split_subset(lesion_split_t s, int which, lesion_manifest_t* out);

/* Images ------------------------------------------------------------------- */

/* Deterministic evaluation preprocessing of one PNG/JPEG file, written as PNG. */
LESION_API int lesion_preprocess_image(lesion_config_t cfg, const char* in_path, const char* out_path);

/* Training and checkpoints ------------------------------------------------- */

/* Trains the configured model; log_csv_path may be NULL. */
LESION_API int lesion_train(lesion_config_t cfg, lesion_manifest_t train, lesion_manifest_t val,
                            lesion_checkpoint_t* out, const char* log_csv_path);
LESION_API int lesion_checkpoint_save(lesion_checkpoint_t c, const char* path);
LESION_API int lesion_checkpoint_load(const char* path, lesion_checkpoint_t* out);
LESION_API int lesion_checkpoint_destroy(lesion_checkpoint_t c);
LESION_API int lesion_checkpoint_info(lesion_checkpoint_t c, int* epoch, double* metric);

/* Predictions -------------------------------------------------------------- */

/* Runs the checkpoint over a manifest with its recorded preprocessing. */
LESION_API int lesion_evaluate(lesion_checkpoint_t c, lesion_manifest_t m, lesion_predictions_t* out);
LESION_API int lesion_predictions_read(const char* path, lesion_predictions_t* out);
LESION_API int lesion_predictions_write(lesion_predictions_t p, const char* path);
LESION_API int lesion_predictions_destroy(lesion_predictions_t p);
LESION_API int lesion_predictions_size(lesion_predictions_t p, size_t* n);
LESION_API int lesion_predictions_row(lesion_predictions_t p, size_t index, char* id_out, size_t* id_len,
                                      double probs[LESION_NUM_CLASSES]);
LESION_API int lesion_predictions_average(const lesion_predictions_t* sets, size_t count, lesion_predictions_t* out);

/* Reports ------------------------------------------------------------------ */

/* Compares argmax predictions with the manifest labels. */
LESION_API int lesion_report_create(lesion_predictions_t p, lesion_manifest_t truth, lesion_report_t* out);
/* Class indices 0..7. */
LESION_API int lesion_report_from_labels(const int* y_true, const int* y_pred, size_t n, lesion_report_t* out);
LESION_API int lesion_report_destroy(lesion_report_t r);
/* name: accuracy, macro_precision, macro_recall, macro_f1, micro_precision,
 * micro_recall, micro_f1. */
LESION_API int lesion_report_value(lesion_report_t r, const char* name, double* value);
LESION_API int lesion_report_confusion(lesion_report_t r, uint64_t counts[LESION_NUM_CLASSES * LESION_NUM_CLASSES]);
LESION_API int lesion_report_text(lesion_report_t r, char* out, size_t* out_len);
/* Any path may be NULL to skip that output. */
LESION_API int lesion_report_write(lesion_report_t r, const char* json_path, const char* text_path,
                                   const char* confusion_csv_path);

#ifdef __cplusplus
}
#endif

#endif /* LESION_LESION_H_ */
