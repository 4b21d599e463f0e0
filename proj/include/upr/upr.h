/*
 * C interface to the phase-retrieval library.
 *
 * Every object is an opaque handle created by a *_load / *_default /
 * *_generate call and released with the matching *_free. Functions return a
 * upr_status; on failure upr_last_error() describes the problem. The message
 * is thread-local and stays valid until the next failing call on the same
 * thread.
 */
#ifndef UPR_UPR_H
#define UPR_UPR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(UPR_BUILDING_LIBRARY)
#    define UPR_API __declspec(dllexport)
#  else
#    define UPR_API __declspec(dllimport)
#  endif
#else
#  define UPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum upr_status {
  UPR_OK = 0,
  UPR_ERR_INVALID_ARGUMENT = 1,
  UPR_ERR_DIMENSION = 2,
  UPR_ERR_NUMERICAL = 3,
  UPR_ERR_CONFIG = 4,
  UPR_ERR_IO = 5,
  UPR_ERR_INTERNAL = 6
} upr_status;

typedef struct upr_config upr_config;
typedef struct upr_params upr_params;
typedef struct upr_instance upr_instance;

UPR_API const char* upr_version(void);
UPR_API const char* upr_last_error(void);
UPR_API const char* upr_status_name(upr_status status);

/* Experiment configuration (flat `key = value` files). */
UPR_API upr_status upr_config_default(upr_config** out);
UPR_API upr_status upr_config_load(const char* path, upr_config** out);
/* Same keys as the file format; the config is re-validated after the change. */
UPR_API upr_status upr_config_set(upr_config* cfg, const char* key, const char* value);
/* Copies up to `len` grid ratios into `out`; `count` receives the grid size. */
UPR_API upr_status upr_config_ratios(const upr_config* cfg, double* out, size_t len, size_t* count);
UPR_API upr_status upr_config_save(const upr_config* cfg, const char* path);
UPR_API void upr_config_free(upr_config* cfg);

/* Problem instances (binary container, see README). */
UPR_API upr_status upr_instance_generate(int n, int m, uint64_t seed, upr_instance** out);
UPR_API upr_status upr_instance_load(const char* path, upr_instance** out);
UPR_API upr_status upr_instance_save(const upr_instance* inst, const char* path);
UPR_API upr_status upr_instance_dims(const upr_instance* inst, size_t* n, size_t* m);
UPR_API upr_status upr_instance_truth(const upr_instance* inst, double* out, size_t len);
UPR_API upr_status upr_instance_measurements(const upr_instance* inst, double* out, size_t len);
UPR_API void upr_instance_free(upr_instance* inst);

/* Low-complexity initial point for an instance; `out` holds n values. */
UPR_API upr_status upr_initialize(const upr_instance* inst, const upr_config* cfg, double* out, size_t len);
/*
 * Initializes and runs `method` ("rwf", "irwf" or "upr") for the configured
 * iteration budget. `params` is required for "upr" and ignored otherwise.
 * `solver_seed` drives mini-batch sampling. Writes the final iterate to `out`
 * and, when non-null, its relative error to `rel_err`.
 */
UPR_API upr_status upr_solve(const upr_instance* inst, const upr_config* cfg, const char* method,
                             const upr_params* params, uint64_t solver_seed, double* out, size_t len,
                             double* rel_err);
/* min(||x - xstar||, ||x + xstar||) */
UPR_API upr_status upr_distance(const double* x, const double* xstar, size_t len, double* out);

/* Unfolded-network parameters (`upr-params v1` text format). */
UPR_API upr_status upr_params_load(const char* path, upr_params** out);
UPR_API upr_status upr_params_save(const upr_params* params, const char* path);
UPR_API upr_status upr_params_shape(const upr_params* params, int* layers, int* n);
UPR_API void upr_params_free(upr_params* params);

/*
 * Trains a network at the grid point (cfg n, ratio, cfg seed). Optional
 * outputs: `loss_csv` receives `epoch,mean_loss`; `meta_path` receives the
 * grid description and sensing-matrix hash that upr_eval checks.
 */
UPR_API upr_status upr_train(const upr_config* cfg, double ratio, upr_params** out, const char* loss_csv,
                             const char* meta_path);
/*
 * Evaluates the configured methods at one ratio and writes a sweep CSV.
 * "upr" uses `params` instead of training; `meta_path` may be null.
 */
UPR_API upr_status upr_eval(const upr_config* cfg, double ratio, const upr_params* params, const char* meta_path,
                            const char* csv_out);
/* `ratio,method,trials,esr,mean_rel_err` plus a `.meta` sidecar. */
UPR_API upr_status upr_sweep_esr(const upr_config* cfg, const char* csv_out);
UPR_API upr_status upr_sweep_error(const upr_config* cfg, const char* csv_out);
/* `iter,method,mean_rel_err,successes` at the first configured ratio. */
UPR_API upr_status upr_curve(const upr_config* cfg, const char* csv_out);

#ifdef __cplusplus
}
#endif

#endif /* UPR_UPR_H */
