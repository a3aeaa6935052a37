/**
 * Copyright 2026 The skey Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the skey key-estimation library.
 *
 * Every call returns a skey_status. On failure skey_last_error() holds a
 * message for the calling thread. Strings returned through char** are owned
 * by the caller and released with skey_string_free. Structured inputs and
 * outputs are JSON text; NULL option strings mean "defaults".
 */
#ifndef SKEY_SKEY_H_
#define SKEY_SKEY_H_

#include <stdint.h>

#if defined(SKEY_BUILDING_LIBRARY)
#define SKEY_API __attribute__((visibility("default")))
#else
#define SKEY_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum skey_status {
  SKEY_OK = 0,
  SKEY_UNREADABLE_FILE = 1,
  SKEY_UNSUPPORTED_CODEC = 2,
  SKEY_EMPTY_AUDIO = 3,
  SKEY_TOO_SHORT = 4,
  SKEY_INVALID_TRANSPOSITION = 5,
  SKEY_SHAPE_MISMATCH = 6,
  SKEY_NONFINITE_ACTIVATION = 7,
  SKEY_NONFINITE_LOSS = 8,
  SKEY_EMPTY_BATCH = 9,
  SKEY_EMPTY_CORPUS = 10,
  SKEY_DEGENERATE_CALIBRATION = 11,
  SKEY_UNPARSABLE_LABEL = 12,
  SKEY_MISSING_PREDICTION = 13,
  SKEY_MISSING_REFERENCE = 14,
  SKEY_IO_ERROR = 15,
  SKEY_INVALID_ARGUMENT = 16,
  SKEY_INTERNAL = 17
} skey_status;

typedef struct skey_model skey_model;

SKEY_API const char* skey_version(void);
SKEY_API const char* skey_status_name(skey_status status);
SKEY_API const char* skey_last_error(void);
SKEY_API void skey_string_free(char* s);

/* Key label text ("C major", "F# minor", "Bbm") to tonic (0 = A) and mode
 * (0 = major, 1 = minor). */
SKEY_API skey_status skey_parse_key(const char* text, int* tonic, int* mode);

/* Flat "key = value" config file as a JSON object. */
SKEY_API skey_status skey_read_config(const char* path, char** config_json);

/* spec_json keys: n_per_key, holdout_per_key, duration_seconds, seed,
 * write_audio, jobs, ... Writes manifest.jsonl, train.jsonl and
 * heldout.jsonl under out_dir. result_json lists the manifest paths. */
SKEY_API skey_status skey_synth_corpus(const char* spec_json, const char* out_dir, char** result_json);

/* Receives one training-log record (JSON) per optimizer step. */
typedef void (*skey_progress_fn)(const char* step_json, void* user);

/* config_json: training configuration (epochs, batch_size, seed, ...).
 * options_json: checkpoint_dir, log_path, resume (checkpoint path),
 * cache_dir, metadata (object copied into checkpoints and the log).
 * summary_json receives per-epoch mean losses and checkpoint paths. */
SKEY_API skey_status skey_train(const char* manifest_path, const char* config_json, const char* options_json,
                                skey_progress_fn progress, void* user, skey_model** out_model,
                                char** summary_json);

SKEY_API skey_status skey_model_init(const char* model_config_json, uint64_t seed, skey_model** out_model);
SKEY_API skey_status skey_model_load(const char* path, skey_model** out_model);
SKEY_API skey_status skey_model_save(const skey_model* model, const char* path, const char* metadata_json);
SKEY_API void skey_model_free(skey_model* model);
/* Config, parameter count, step, calibration and stored metadata. */
SKEY_API skey_status skey_model_info(const skey_model* model, char** info_json);
/* Sets the calibration map from the JSON form reported by skey_model_info;
 * NULL clears it. */
SKEY_API skey_status skey_model_set_calibration(skey_model* model, const char* calibration_json);

/* Binds the model's output to key labels with synthetic probes and stores
 * the map in the model. options_json: jobs. */
SKEY_API skey_status skey_calibrate(skey_model* model, const char* options_json, char** diagnostics_json);

/* options_json: cache_dir, first_30s, jobs. The model must be calibrated. */
SKEY_API skey_status skey_predict_file(const skey_model* model, const char* audio_path, const char* options_json,
                                       char** prediction_json);
/* Writes one prediction per record to out_path (JSON-lines). options_json
 * additionally takes metadata (written as the first line). */
SKEY_API skey_status skey_predict_manifest(const skey_model* model, const char* manifest_path, const char* out_path,
                                           const char* options_json, char** summary_json);

/* options_json: fifths ("symmetric" or "ascending"), metadata. table_text
 * may be NULL. */
SKEY_API skey_status skey_evaluate(const char* manifest_path, const char* predictions_path, const char* options_json,
                                   char** report_json, char** table_text);

/* Two-component PCA of the pre-head features, written as CSV.
 * options_json: cache_dir, first_30s, jobs, metadata. */
SKEY_API skey_status skey_embed(const skey_model* model, const char* manifest_path, const char* out_csv,
                                const char* options_json, char** summary_json);

/* Invariant suites: CPSD zero-set, gradient checks, head equivariance,
 * metric fixtures. Returns SKEY_OK even when a suite fails; check
 * report_json["passed"]. */
SKEY_API skey_status skey_selftest(uint64_t seed, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* SKEY_SKEY_H_ */
