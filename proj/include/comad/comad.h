#ifndef COMAD_COMAD_H
#define COMAD_COMAD_H

/*
 * Component-aware logical anomaly detection, C interface.
 *
 * Conventions:
 *  - Every function returns a comad_status. On failure the message is
 *    available from comad_last_error() on the same thread.
 *  - Strings returned through char** are NUL-terminated and owned by the
 *    caller; release them with comad_string_free(). Byte buffers returned
 *    through uint8_t** are released with comad_buffer_free().
 *  - Handles are opaque. A model is immutable once created and may be
 *    shared between threads. Policies are plain values; do not mutate a
 *    policy while another thread scores with it.
 *  - JSON arguments may be NULL where documented, meaning "defaults".
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COMAD_BUILDING_LIBRARY)
#    define COMAD_API __declspec(dllexport)
#  else
#    define COMAD_API __declspec(dllimport)
#  endif
#else
#  define COMAD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum comad_status {
    COMAD_OK = 0,
    COMAD_ERR_INVALID_ARGUMENT = 1,
    COMAD_ERR_IO = 2,
    COMAD_ERR_DECODE = 3,
    COMAD_ERR_UNSUPPORTED_VERSION = 4,
    COMAD_ERR_TRAINING = 5,
    COMAD_ERR_DATA = 6,
    COMAD_ERR_CANCELLED = 7,
    COMAD_ERR_INTERNAL = 8
} comad_status;

typedef struct comad_model comad_model;
typedef struct comad_policy comad_policy;
typedef struct comad_image comad_image;

/* ---- library ---------------------------------------------------------- */

COMAD_API const char* comad_version(void);
COMAD_API const char* comad_status_name(comad_status status);
/* Message of the last failed call on this thread ("" if none). */
COMAD_API const char* comad_last_error(void);

COMAD_API void comad_string_free(char* s);
COMAD_API void comad_buffer_free(uint8_t* data);

/* level: 0 info, 1 warning. A NULL callback restores the default sink
 * (warnings to stderr). */
typedef void (*comad_log_fn)(int level, const char* message, void* user);
COMAD_API void comad_set_log_callback(comad_log_fn fn, void* user);

/* ---- configuration ---------------------------------------------------- */

COMAD_API comad_status comad_config_default(char** out_json);
/* Merges overlay_json (nested or dotted keys, may be NULL) over base_json
 * (NULL = defaults) and validates the result. */
COMAD_API comad_status comad_config_merge(const char* base_json, const char* overlay_json, char** out_json);
/* Sets one dotted key; value_json is a JSON literal such as "false" or "7". */
COMAD_API comad_status comad_config_set(const char* config_json, const char* dotted_key, const char* value_json,
                                        char** out_json);

/* ---- images ----------------------------------------------------------- */

COMAD_API comad_status comad_image_read(const char* path, comad_image** out);
COMAD_API comad_status comad_image_decode_png(const uint8_t* data, size_t size, comad_image** out);
/* rgb: height*width*3 bytes, row-major. */
COMAD_API comad_status comad_image_create(int height, int width, const uint8_t* rgb, comad_image** out);
COMAD_API comad_status comad_image_size(const comad_image* image, int* height, int* width);
/* Pointer to the internal RGB buffer, valid while the image lives. */
COMAD_API const uint8_t* comad_image_data(const comad_image* image);
COMAD_API comad_status comad_image_encode_png(const comad_image* image, uint8_t** out_data, size_t* out_size);
COMAD_API void comad_image_free(comad_image* image);

/* ---- feature files ("CFM1") ------------------------------------------- */

/* *out_data holds rows*cols*dim floats, channel fastest; free with
 * comad_buffer_free((uint8_t*)data). */
COMAD_API comad_status comad_features_read(const char* path, int* rows, int* cols, int* dim, float** out_data);
COMAD_API comad_status comad_features_write(const char* path, int rows, int cols, int dim, const float* data);

/* ---- models ----------------------------------------------------------- */

/* Trains on the PNGs in <dataset_dir>/train/good, or in <dataset_dir> itself. */
COMAD_API comad_status comad_train(const char* dataset_dir, const char* config_json, comad_model** out);
COMAD_API comad_status comad_model_load(const char* path, comad_model** out);
COMAD_API comad_status comad_model_save(const comad_model* model, const char* path);
COMAD_API comad_status comad_model_encode(const comad_model* model, uint8_t** out_data, size_t* out_size);
COMAD_API comad_status comad_model_decode(const uint8_t* data, size_t size, comad_model** out);
/* Kept components, calibration, normalisers and training statistics. */
COMAD_API comad_status comad_model_summary(const comad_model* model, char** out_json);
COMAD_API comad_status comad_model_config(const comad_model* model, char** out_json);
COMAD_API void comad_model_free(comad_model* model);

/* ---- policy ----------------------------------------------------------- */

COMAD_API comad_status comad_policy_create(comad_policy** out);
/* {"policy": {...}}, the bare inner object, or dotted "policy.*" keys. */
COMAD_API comad_status comad_policy_from_json(const char* json, comad_policy** out);
COMAD_API comad_status comad_policy_load(const char* path, comad_policy** out);
COMAD_API comad_status comad_policy_to_json(const comad_policy* policy, char** out_json);
COMAD_API comad_status comad_policy_set_weight(comad_policy* policy, int component, double weight);
COMAD_API comad_status comad_policy_set_threshold(comad_policy* policy, int component, double threshold);
/* has_value = 0 clears the global threshold (the model default applies). */
COMAD_API comad_status comad_policy_set_global_threshold(comad_policy* policy, int has_value, double threshold);
COMAD_API comad_status comad_policy_set_ignore_background(comad_policy* policy, int ignore);
COMAD_API comad_status comad_policy_copy(const comad_policy* policy, comad_policy** out);
COMAD_API void comad_policy_free(comad_policy* policy);

/* ---- scoring ---------------------------------------------------------- */

typedef enum comad_ensemble_mode {
    COMAD_ENSEMBLE_ADD = 0,
    COMAD_ENSEMBLE_NORMALIZED_ADD = 1
} comad_ensemble_mode;

typedef struct comad_score_options {
    /* External detector score fused into "combined_score". */
    int has_external_score;
    double external_score;
    comad_ensemble_mode ensemble_mode;
    /* Training-set mean of the external detector (normalized_add only). */
    double external_mean;
    /* Optional external anomaly map at the pipeline resolution
     * (map_height*map_width floats); adds "classified" to the report. */
    const float* anomaly_map;
    int map_height;
    int map_width;
} comad_score_options;

COMAD_API void comad_score_options_init(comad_score_options* options);

/* image_id may be NULL ("image"); it also selects the feature file when the
 * model uses file features. policy may be NULL (defaults). */
COMAD_API comad_status comad_score(const comad_model* model, const comad_image* image, const char* image_id,
                                   const comad_policy* policy, char** out_report_json);
COMAD_API comad_status comad_score_ex(const comad_model* model, const comad_image* image, const char* image_id,
                                      const comad_policy* policy, const comad_score_options* options,
                                      char** out_report_json);

/* Per-component region masks (run-length encoded) and, if out_overlay is
 * not NULL, a colour-coded overlay PNG at the pipeline resolution. */
COMAD_API comad_status comad_segment(const comad_model* model, const comad_image* image, const char* image_id,
                                     char** out_masks_json, uint8_t** out_overlay_png, size_t* out_overlay_size);

/* Labels the peak of an external anomaly map with the component under it. */
COMAD_API comad_status comad_classify(const comad_model* model, const comad_image* image, const char* image_id,
                                      const comad_policy* policy, const float* anomaly_map, int map_height,
                                      int map_width, char** out_json);

COMAD_API comad_status comad_ensemble(double d, double external_score, comad_ensemble_mode mode, double d_mean,
                                      double external_mean, double* out);

/* ---- evaluation ------------------------------------------------------- */

/* Called after each scored image; return non-zero to cancel. */
typedef int (*comad_progress_fn)(size_t done, size_t total, void* user);

/* Scores every PNG under <dataset_dir>/test. out_json holds overall / per-kind /
 * per-category AUROC and per-image records; out_table (optional) the
 * human-readable table; out_records_jsonl (optional) one record per line. */
COMAD_API comad_status comad_evaluate(const comad_model* model, const comad_policy* policy, const char* dataset_dir,
                                      comad_progress_fn progress, void* user, char** out_json, char** out_table,
                                      char** out_records_jsonl);

/* Trains and evaluates the standard ablation variants on one dataset. */
COMAD_API comad_status comad_ablate(const char* dataset_dir, const char* config_json, char** out_json,
                                    char** out_table);

COMAD_API comad_status comad_auroc(const double* scores, const uint8_t* anomalous, size_t n, double* out);

/* ---- synthetic data --------------------------------------------------- */

/* kind: "product" or "circles". options_json (may be NULL):
 *  product: {"n_train", "n_test_normal", "defects": {"kind": n}, "noise"}
 *  circles: {"normal_count", "anomalous_counts": [..], "n_train", "n_test",
 *            "min_center_distance"} */
COMAD_API comad_status comad_generate(const char* kind, const char* out_dir, uint64_t seed, const char* options_json);

#ifdef __cplusplus
}
#endif

#endif
