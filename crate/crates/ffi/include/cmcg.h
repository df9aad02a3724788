#ifndef CMCG_H
#define CMCG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmcgSolver {
  CMCG_SOLVER_CMCG = 0,
  CMCG_SOLVER_FW = 1,
  CMCG_SOLVER_FS = 2,
} CmcgSolver;

typedef enum CmcgStatus {
  CMCG_STATUS_OK = 0,
  CMCG_STATUS_NULL_POINTER = 1,
  CMCG_STATUS_INVALID_ARGUMENT = 2,
  CMCG_STATUS_CONFIG = 3,
  CMCG_STATUS_SOLVER = 4,
  CMCG_STATUS_NOT_RUN = 5,
  CMCG_STATUS_OUT_OF_RANGE = 6,
  CMCG_STATUS_PANIC = 7,
} CmcgStatus;

/**
 * A configured experiment and, after a run, its results.
 */
typedef struct CmcgExperiment CmcgExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *cmcg_last_error(void);

/**
 * Library version as a static string.
 */
const char *cmcg_version(void);

/**
 * Parses a JSON experiment configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_from_json(const char *json, struct CmcgExperiment **out);

/**
 * Creates an experiment from a preset name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_from_preset(const char *name, struct CmcgExperiment **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void cmcg_experiment_free(struct CmcgExperiment *h);

/**
 * # Safety
 * `h` must be a valid handle.
 */
enum CmcgStatus cmcg_experiment_set_solver(struct CmcgExperiment *h, enum CmcgSolver solver);

/**
 * # Safety
 * `h` must be a valid handle.
 */
enum CmcgStatus cmcg_experiment_set_max_periods(struct CmcgExperiment *h, size_t periods);

/**
 * # Safety
 * `h` must be a valid handle.
 */
enum CmcgStatus cmcg_experiment_set_tolerance(struct CmcgExperiment *h, double tolerance);

/**
 * Configuration as JSON; free with [`cmcg_string_free`].
 *
 * # Safety
 * `h` must be a valid handle and `out` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_config_json(const struct CmcgExperiment *h, char **out);

/**
 * Runs the experiment, writing its output files into `output_dir`.
 *
 * # Safety
 * `h` must be a valid handle and `output_dir` a NUL-terminated string.
 */
enum CmcgStatus cmcg_experiment_run(struct CmcgExperiment *h, const char *output_dir);

/**
 * Number of convergence history rows.
 *
 * # Safety
 * `h` must be a valid handle and `len` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_history_len(const struct CmcgExperiment *h, size_t *len);

/**
 * Row `index` of the history: simulated periods, error, relative misfit.
 *
 * # Safety
 * `h` must be a valid handle and the outputs valid pointers.
 */
enum CmcgStatus cmcg_experiment_history_row(const struct CmcgExperiment *h,
                                            size_t index,
                                            size_t *periods,
                                            double *err,
                                            double *misfit);

/**
 * Error of the final field.
 *
 * # Safety
 * `h` must be a valid handle and `err` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_final_error(const struct CmcgExperiment *h, double *err);

/**
 * Number of complex dofs in the solution.
 *
 * # Safety
 * `h` must be a valid handle and `len` a valid pointer.
 */
enum CmcgStatus cmcg_experiment_ndofs(const struct CmcgExperiment *h, size_t *len);

/**
 * Copies the final complex field into `re` and `im`, each of length `len` (= ndofs).
 *
 * # Safety
 * `h` must be a valid handle; `re` and `im` must point to `len` writable doubles.
 */
enum CmcgStatus cmcg_experiment_solution(const struct CmcgExperiment *h,
                                         double *re,
                                         double *im,
                                         size_t len);

/**
 * All presets as a JSON array; free with [`cmcg_string_free`].
 */
char *cmcg_presets_json(void);

/**
 * Frees a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cmcg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMCG_H */
