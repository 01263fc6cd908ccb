/*
 * Copyright 2026 The UniVSE Authors.
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

/*
 * C interface to the UniVSE library.
 *
 * Every fallible call returns a univse_status. On failure the message is
 * available from univse_last_error() on the same thread until the next
 * call. Strings handed out through char** parameters are owned by the
 * caller and released with univse_string_free.
 */

#ifndef UNIVSE_UNIVSE_H_
#define UNIVSE_UNIVSE_H_

#include <stddef.h>

#if defined(__GNUC__)
#define UNIVSE_API __attribute__((visibility("default")))
#else
#define UNIVSE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum univse_status {
  UNIVSE_OK = 0,
  UNIVSE_E_INVALID_ARGUMENT = 1,
  UNIVSE_E_IO = 2,
  UNIVSE_E_FORMAT = 3,
  UNIVSE_E_PARSE = 4,
  UNIVSE_E_CONFIG = 5,
  UNIVSE_E_NUMERIC = 6,
  UNIVSE_E_DATA = 7,
  UNIVSE_E_INTERNAL = 99
} univse_status;

typedef struct univse_config univse_config;
typedef struct univse_model univse_model;

UNIVSE_API const char* univse_version(void);
/* Short stable name such as "io_error"; "unknown" for foreign codes. */
UNIVSE_API const char* univse_status_name(int status);
/* Message of the last failed call on this thread, "" if none. */
UNIVSE_API const char* univse_last_error(void);
UNIVSE_API void univse_string_free(char* s);
/* Library log output goes to stderr. level: trace, debug, info, warn,
 * error, critical or off. */
UNIVSE_API univse_status univse_set_log_level(const char* level);

/* ---- run configuration ---- */

UNIVSE_API univse_status univse_config_new(univse_config** out);
/* Parses an INI file. */
UNIVSE_API univse_status univse_config_load(const char* path, univse_config** out);
UNIVSE_API void univse_config_free(univse_config* cfg);
/* key is "section.key", e.g. "optim.lr". */
UNIVSE_API univse_status univse_config_set(univse_config* cfg, const char* key, const char* value);
UNIVSE_API univse_status univse_config_get(const univse_config* cfg, const char* key, char** value);
/* Resolved configuration as INI text. */
UNIVSE_API univse_status univse_config_dump(const univse_config* cfg, char** ini);
/* Newline-separated list of every key. */
UNIVSE_API univse_status univse_config_keys(char** keys);

/* ---- subcommands; each validates cfg and returns a JSON summary ---- */

UNIVSE_API univse_status univse_run_synth(const univse_config* cfg, char** report);
/* JSON array of {"id","objects","attrs","rels"}, one per sentence. */
UNIVSE_API univse_status univse_run_parse(const char* conllu_path, char** report);
UNIVSE_API univse_status univse_run_train(const univse_config* cfg, int resume, char** report);
/* task: "retrieval", "adversarial", "unified", "disambiguate" or "relevance". */
UNIVSE_API univse_status univse_run_eval(const univse_config* cfg, const char* task, char** report);
/* Writes JSON lines to out_path. */
UNIVSE_API univse_status univse_run_attack(const univse_config* cfg, const char* out_path, char** report);
/* ppm_path may be NULL. */
UNIVSE_API univse_status univse_run_relevance(const univse_config* cfg, const char* image_id, const char* query,
                                              const char* ppm_path, char** report);
UNIVSE_API univse_status univse_features_inspect(const char* path, char** report);

/* ---- trained model ---- */

/* vocab_path may be NULL: vocab.tsv next to the checkpoint is used. */
UNIVSE_API univse_status univse_model_load(const char* checkpoint, const char* vocab_path, univse_model** out);
UNIVSE_API void univse_model_free(univse_model* model);
UNIVSE_API size_t univse_model_dim(const univse_model* model);
/* Embeds a noun, "adj noun" or "subject relation object" query. out has
 * room for univse_model_dim() values. */
UNIVSE_API univse_status univse_model_encode_query(const univse_model* model, const char* query, double* out,
                                                   size_t capacity);
/* Embeds a whitespace-tokenized sentence with the sentence encoder alone. */
UNIVSE_API univse_status univse_model_encode_sentence(const univse_model* model, const char* sentence, double* out,
                                                      size_t capacity);
/* Pooled embedding of a rows x cols x depth float map, row-major, depth fastest. */
UNIVSE_API univse_status univse_model_encode_image(const univse_model* model, const float* features, size_t rows,
                                                   size_t cols, size_t depth, double* out, size_t capacity);
/* Softmax relevance over the rows*cols regions at temperature tau. */
UNIVSE_API univse_status univse_model_relevance(const univse_model* model, const char* query, const float* features,
                                                size_t rows, size_t cols, size_t depth, double tau, double* out,
                                                size_t capacity);

#ifdef __cplusplus
}
#endif

#endif /* UNIVSE_UNIVSE_H_ */
