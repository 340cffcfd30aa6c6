#ifndef RAL_H
#define RAL_H

/* C interface to the lipreading training/ablation engine.
 *
 * All functions returning int yield a ral_status code; the message for the
 * most recent failure on the calling thread is available via ral_last_error().
 * Handles are opaque and freed with their matching *_free function.
 */

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#define RAL_API __declspec(dllexport)
#else
#define RAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ral_status {
    RAL_OK = 0,
    RAL_ERR_CHECK = 1,   /* verification failure (gradient suite over tolerance) */
    RAL_ERR_NUMERIC = 2, /* non-finite value abort */
    RAL_ERR_IO = 3,      /* filesystem or file-format problem */
    RAL_ERR_INVALID = 4  /* bad arguments, config or contract violation */
} ral_status;

typedef struct ral_config ral_config;   /* resolved run configuration */
typedef struct ral_model ral_model;     /* model + weights */
typedef struct ral_dataset ral_dataset; /* loaded clip dataset */

RAL_API const char* ral_version(void);
RAL_API const char* ral_last_error(void);
RAL_API void ral_free_string(char* s);

/* ---- configuration ----
 * Configs are JSON documents; ral_config_set applies a dotted-path override
 * (e.g. "model.enable_rao", "true"), values parsed as JSON when possible.
 */
RAL_API ral_config* ral_config_default(void);
RAL_API ral_config* ral_config_load(const char* path); /* defaults overlaid with file */
RAL_API int ral_config_set(ral_config* cfg, const char* key, const char* value);
RAL_API char* ral_config_json(const ral_config* cfg); /* free with ral_free_string */
RAL_API void ral_config_free(ral_config* cfg);

/* ---- run commands (mirror the CLI) ---- */
RAL_API int ral_run_gradcheck(const ral_config* cfg, int verbose);
RAL_API int ral_run_train(const ral_config* cfg);
RAL_API int ral_run_eval(const ral_config* cfg, double* accuracy_out);
RAL_API int ral_run_ablate(const ral_config* cfg);
RAL_API int ral_run_generate(const ral_config* cfg);

/* ---- datasets (RALT layout) ---- */
RAL_API ral_dataset* ral_dataset_open(const char* root, const char* manifest, const char* split);
RAL_API int64_t ral_dataset_size(const ral_dataset* ds);
RAL_API void ral_dataset_free(ral_dataset* ds);

/* ---- models ---- */
RAL_API ral_model* ral_model_create(const ral_config* cfg); /* cfg.model, seeded by cfg.seed */
RAL_API ral_model* ral_model_load(const char* checkpoint_dir);
RAL_API int ral_model_save(const ral_model* model, const char* checkpoint_dir);
RAL_API int64_t ral_model_param_count(const ral_model* model);
RAL_API int ral_model_num_classes(const ral_model* model);
/* frames: b*t*h*w grayscale floats, row-major; logits_out: b*num_classes */
RAL_API int ral_model_forward(ral_model* model, const float* frames, int64_t b, int64_t t,
                              int64_t h, int64_t w, float* logits_out);
RAL_API int ral_evaluate(ral_model* model, const ral_dataset* ds, double* accuracy_out);
RAL_API void ral_model_free(ral_model* model);

/* test instrumentation: inject a named fault into selected kernels ("" clears) */
RAL_API void ral_debug_set_fault(const char* name);

#ifdef __cplusplus
}
#endif

#endif /* RAL_H */
