#ifndef CONFIDENCE_ENGINE_H
#define CONFIDENCE_ENGINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CeStatus {
  CE_STATUS_OK = 0,
  CE_STATUS_MODEL_ERROR = 1,
  CE_STATUS_NUMERIC_ERROR = 2,
  CE_STATUS_INVALID_ARGUMENT = 3,
  CE_STATUS_PANIC = 4,
} CeStatus;

// A parsed and checked model.
typedef struct CeModel CeModel;

// The result of solving a model.
typedef struct CeReport CeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *ce_last_error(void);

// Parses model text. On success `*out` receives a new handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum CeStatus ce_model_parse(const char *text, struct CeModel **out);

// # Safety
// `model` must come from [`ce_model_parse`] and not be freed twice.
void ce_model_free(struct CeModel *model);

// Number of model variables, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ce_model_variable_count(const struct CeModel *model);

// Number of study arms, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ce_model_study_count(const struct CeModel *model);

// Solves `model`. Non-convergence is not an error; see
// [`ce_report_converged`].
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum CeStatus ce_solve(const struct CeModel *model,
                       uint32_t max_iters,
                       double tol,
                       struct CeReport **out);

// # Safety
// `report` must come from [`ce_solve`] and not be freed twice.
void ce_report_free(struct CeReport *report);

// # Safety
// `report` must be null or a live handle.
bool ce_report_converged(const struct CeReport *report);

// # Safety
// `report` must be null or a live handle.
size_t ce_report_iterations(const struct CeReport *report);

// Delta-method natural-scale posterior mean and sd of one variable.
//
// # Safety
// `report` must be a live handle, `name` NUL-terminated, and `mean`/`sd`
// valid pointers.
enum CeStatus ce_report_natural(const struct CeReport *report,
                                const char *name,
                                double *mean,
                                double *sd);

// The report as JSON. Free the result with [`ce_string_free`]; null on
// failure.
//
// # Safety
// `report` must be null or a live handle; `model_name` null or
// NUL-terminated.
char *ce_report_json(const struct CeReport *report, const char *model_name);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void ce_string_free(char *s);

// Library version as a static NUL-terminated string.
const char *ce_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFIDENCE_ENGINE_H */
