#ifndef DEEPWATER_H
#define DEEPWATER_H

/* Generated by cbindgen from deepwater-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes of every fallible entry point.
typedef enum DwStatus {
  // Success.
  DW_STATUS_OK = 0,
  // Malformed input: null pointer, bad UTF-8/JSON or invalid parameters.
  DW_STATUS_INVALID_INPUT = 1,
  // The surface violates the diffeomorphism guard.
  DW_STATUS_GUARD_VIOLATION = 2,
  // The elliptic fixed point failed to contract.
  DW_STATUS_NO_CONTRACTION = 3,
  // Branch continuation stopped early; partial output was produced.
  DW_STATUS_PARTIAL_BRANCH = 4,
  // Any other numerical failure.
  DW_STATUS_NUMERICAL = 5,
  // A panic was caught at the boundary.
  DW_STATUS_INTERNAL = 6,
} DwStatus;

// Opaque solver configuration handle.
typedef struct DwConfig DwConfig;

// Opaque periodic-function handle.
typedef struct DwFunction DwFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message of the calling thread. The pointer stays valid until
// the next failing call on the same thread; never free it.
const char *dw_last_error_message(void);

// Default solver configuration. Release with `dw_config_free`.
struct DwConfig *dw_config_default(void);

// Parses a configuration from its JSON schema (unset fields take their
// defaults). Returns null on error. Release with `dw_config_free`.
//
// # Safety
// `json` must be a valid NUL-terminated string.
struct DwConfig *dw_config_from_json(const char *json);

// Sets the truncation radius K of a configuration.
//
// # Safety
// `cfg` must be a live handle from `dw_config_default`/`dw_config_from_json`.
enum DwStatus dw_config_set_trunc(struct DwConfig *cfg, uint32_t trunc);

// Releases a configuration handle (null is ignored).
//
// # Safety
// `cfg` must have been returned by this library and not freed before.
void dw_config_free(struct DwConfig *cfg);

// Parses a periodic function from the shared coefficient JSON. Returns null
// on error. Release with `dw_function_free`.
//
// # Safety
// `json` must be a valid NUL-terminated string.
struct DwFunction *dw_function_from_json(const char *json);

// Serializes a function to the coefficient JSON (floats carry 17
// significant digits). Release the string with `dw_string_free`.
//
// # Safety
// `f` must be a live function handle.
char *dw_function_to_json(const struct DwFunction *f);

// Releases a function handle (null is ignored).
//
// # Safety
// `f` must have been returned by this library and not freed before.
void dw_function_free(struct DwFunction *f);

// Releases a string returned by this library (null is ignored).
//
// # Safety
// `s` must have been returned by this library and not freed before.
void dw_string_free(char *s);

// Applies the Dirichlet-Neumann operator: `*out = G(eta) psi`.
//
// # Safety
// All handles must be live; `out` must point to writable storage.
enum DwStatus dw_dn_apply(const struct DwConfig *cfg,
                          const struct DwFunction *eta,
                          const struct DwFunction *psi,
                          struct DwFunction **out);

// Runs the algebraic-identity suite on seeded test data and returns the
// discrepancy report as JSON in `*out_json` (release with
// `dw_string_free`).
//
// # Safety
// All handles must be live; `out_json` must point to writable storage.
enum DwStatus dw_dn_verify(const struct DwConfig *cfg,
                           const struct DwFunction *eta,
                           uint64_t seed,
                           char **out_json);

// Continues the Stokes branch with base wavenumber `k` and gravity `g` up
// to `eps_max` in steps of `eps_step`; the branch JSON lands in
// `*out_json` (release with `dw_string_free`). A truncated branch returns
// `DW_STATUS_PARTIAL_BRANCH` with the partial JSON still written.
//
// # Safety
// `cfg` must be live; `out_json` must point to writable storage.
enum DwStatus dw_stokes_branch(const struct DwConfig *cfg,
                               uint32_t k,
                               double g,
                               double eps_max,
                               double eps_step,
                               char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEEPWATER_H */
