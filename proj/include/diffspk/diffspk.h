/* Copyright 2026 The diffspk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the diffspk library. All functions return a dspk_status;
 * on failure dspk_last_error() describes the error of the calling thread. */

#ifndef DIFFSPK_DIFFSPK_H_
#define DIFFSPK_DIFFSPK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DSPK_API __declspec(dllexport)
#else
#define DSPK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dspk_status {
  DSPK_OK = 0,
  DSPK_ERR_CONFIG = 2,
  DSPK_ERR_DATA = 3,
  DSPK_ERR_NUMERIC = 4,
  DSPK_ERR_INCOMPATIBLE = 5,
  DSPK_ERR_SHAPE = 6,
  DSPK_ERR_INVALID_ARGUMENT = 7,
  DSPK_ERR_INTERNAL = 8
} dspk_status;

typedef struct dspk_config dspk_config;
typedef struct dspk_options dspk_options;
typedef struct dspk_model dspk_model;

typedef void (*dspk_log_fn)(const char* line, void* user);

DSPK_API const char* dspk_last_error(void);
DSPK_API const char* dspk_version(void);

/* Configuration. A config made with dspk_config_new holds the defaults. */
DSPK_API dspk_status dspk_config_new(dspk_config** out);
DSPK_API dspk_status dspk_config_load(const char* path, dspk_config** out);
DSPK_API dspk_status dspk_config_parse(const char* text, dspk_config** out);
DSPK_API dspk_status dspk_config_set(dspk_config* config, const char* key, const char* value);
DSPK_API dspk_status dspk_config_hash(const dspk_config* config, uint64_t* out);
/* Writes the canonical key = value text; *required receives the size including the terminator. */
DSPK_API dspk_status dspk_config_text(const dspk_config* config, char* buffer, size_t capacity, size_t* required);
DSPK_API void dspk_config_free(dspk_config* config);

/* Per-command overrides. */
DSPK_API dspk_status dspk_options_new(dspk_options** out);
DSPK_API dspk_status dspk_options_set_seed(dspk_options* options, uint64_t seed);
DSPK_API dspk_status dspk_options_set_out(dspk_options* options, const char* path);
DSPK_API dspk_status dspk_options_set_audio(dspk_options* options, const char* path);
DSPK_API dspk_status dspk_options_set_checkpoint(dspk_options* options, const char* path);
DSPK_API dspk_status dspk_options_set_pred_dir(dspk_options* options, const char* path);
DSPK_API dspk_status dspk_options_set_split(dspk_options* options, const char* split);
DSPK_API dspk_status dspk_options_set_style(dspk_options* options, int style);
DSPK_API dspk_status dspk_options_set_item(dspk_options* options, int item);
DSPK_API dspk_status dspk_options_set_guidance(dspk_options* options, double guidance);
DSPK_API dspk_status dspk_options_set_log(dspk_options* options, dspk_log_fn fn, void* user);
DSPK_API void dspk_options_free(dspk_options* options);

/* Runs gen-data, train, sample, eval, ablate or bench. options may be NULL.
 * The main output path is copied to out_path when it is non-NULL. */
DSPK_API dspk_status dspk_run(const char* command, const dspk_config* config, const dspk_options* options,
                              char* out_path, size_t out_capacity);

/* Trained models. */
DSPK_API dspk_status dspk_model_load(const char* checkpoint_path, dspk_model** out);
DSPK_API dspk_status dspk_model_dims(const dspk_model* model, int* vertex_count, int* feature_dim,
                                     int* subject_count);
/* audio is frames x feature_dim row-major; motion receives frames x vertex_count*3. */
DSPK_API dspk_status dspk_model_sample(const dspk_model* model, const float* audio, int frames, int style,
                                       int step_count, double eta, double guidance, uint64_t seed, float* motion,
                                       size_t motion_len, int* denoiser_passes);
DSPK_API void dspk_model_free(dspk_model* model);

/* Metrics on frames x vertex_count*3 row-major offsets. */
DSPK_API dspk_status dspk_lip_vertex_error(const float* pred, const float* gt, int frames, int vertex_count,
                                           const int* mask, int mask_len, double* out);
DSPK_API dspk_status dspk_facial_dynamics_deviation(const float* pred, const float* gt, int frames,
                                                    int vertex_count, const int* mask, int mask_len,
                                                    double* out);

#ifdef __cplusplus
}
#endif

#endif /* DIFFSPK_DIFFSPK_H_ */
