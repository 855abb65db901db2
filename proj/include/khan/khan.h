/* SPDX-License-Identifier: Apache-2.0 */
#ifndef KHAN_H
#define KHAN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef KHAN_API
#define KHAN_API __attribute__((visibility("default")))
#endif

/* Every call returns one of these. On any non-OK status the message behind
 * khan_last_error() describes what went wrong. */
typedef enum khan_status {
  KHAN_OK = 0,
  KHAN_VERIFY_FAILED = 1, /* a property suite reported a failure */
  KHAN_USAGE_ERROR = 2,   /* invalid arguments or configuration */
  KHAN_DATA_ERROR = 3,    /* missing or malformed input files */
  KHAN_INTERNAL_ERROR = 4
} khan_status;

typedef struct khan_dataset khan_dataset;
typedef struct khan_encoder khan_encoder;

/* Library version, static storage. */
KHAN_API const char* khan_version(void);

/* Message for the most recent failure on this thread; empty string when the
 * last call succeeded. Storage is thread-local, do not free. */
KHAN_API const char* khan_last_error(void);

/* Frees strings returned through char** out-parameters. */
KHAN_API void khan_string_free(char* s);

/* ------------------------------------------------------------- datasets */

/* Deterministic two-class synthetic benchmark: even n_graphs, labels
 * alternate, node counts uniform in [min_nodes, max_nodes]. */
KHAN_API khan_status khan_dataset_synth(int n_graphs, int min_nodes,
                                        int max_nodes, uint64_t seed,
                                        khan_dataset** out);

/* Loads the text dataset layout {name}_A.txt / {name}_graph_indicator.txt /
 * {name}_graph_labels.txt (+ optional {name}_node_labels.txt) from dir.
 * Pass name = NULL to infer it: the directory basename when
 * {basename}_A.txt exists, otherwise the unique *_A.txt in the directory. */
KHAN_API khan_status khan_dataset_load_tu(const char* dir, const char* name,
                                          khan_dataset** out);

/* Writes the same layout into dir (created if needed). name = NULL keeps
 * the dataset's own name. */
KHAN_API khan_status khan_dataset_write_tu(const khan_dataset* ds,
                                           const char* dir, const char* name);

/* Number of graphs, or -1 when ds is NULL. */
KHAN_API int khan_dataset_num_graphs(const khan_dataset* ds);

KHAN_API void khan_dataset_free(khan_dataset* ds);

/* ------------------------------------------------------------- training */

/* Contrastive pretraining. config_json is a JSON object mirroring the
 * training configuration (NULL or "" for defaults; unknown keys are
 * rejected). The trained encoder is written to ckpt_dir; when metrics_path
 * is non-NULL one JSON line per epoch is appended there as epochs finish,
 * so a partial log survives interruption. */
KHAN_API khan_status khan_pretrain(const khan_dataset* ds,
                                   const char* config_json,
                                   const char* ckpt_dir,
                                   const char* metrics_path);

KHAN_API khan_status khan_encoder_load(const char* ckpt_dir,
                                       khan_encoder** out);

KHAN_API void khan_encoder_free(khan_encoder* enc);

/* Frozen-encoder linear probe on ds: stratified 80/20 split under seed,
 * softmax classifier, test accuracy. report_json (optional) receives a JSON
 * object with accuracy and split sizes; free with khan_string_free. */
KHAN_API khan_status khan_eval(const khan_encoder* enc, const khan_dataset* ds,
                               uint64_t seed, double* accuracy,
                               char** report_json);

/* Importance scores of the encoder's final-layer output dimensions as a
 * JSON object with "delta" (independence) and "rho" (coefficient variance)
 * arrays, normalized to max 1 unless raw is nonzero. */
KHAN_API khan_status khan_ckfi_report(const khan_encoder* enc, int raw,
                                      char** report_json);

/* ----------------------------------------------------------- self-check */

/* Runs the built-in property suites whose names contain filter ("" or NULL
 * for all). report (optional) receives one line per suite; num_failed
 * (optional) the failure count. Returns KHAN_VERIFY_FAILED when any suite
 * fails, KHAN_USAGE_ERROR when the filter matches nothing. */
KHAN_API khan_status khan_verify(const char* filter, char** report,
                                 int* num_failed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KHAN_H */
