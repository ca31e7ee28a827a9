#ifndef GENGEOM_H
#define GENGEOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GgScheme {
  GG_SCHEME_SPECTRAL = 0,
  GG_SCHEME_FINITE_DIFFERENCE4 = 1,
} GgScheme;

typedef enum GgStatus {
  GG_STATUS_OK = 0,
  GG_STATUS_NULL_ARGUMENT = 1,
  GG_STATUS_INVALID_UTF8 = 2,
  GG_STATUS_PARSE = 3,
  GG_STATUS_INVALID_INPUT = 4,
  GG_STATUS_UNSTABLE = 5,
  GG_STATUS_COMPUTATION = 6,
  GG_STATUS_IO = 7,
  GG_STATUS_BUFFER_TOO_SMALL = 8,
  GG_STATUS_PANIC = 9,
} GgStatus;

// A periodic grid together with the pointwise kernel.
typedef struct GgFlow GgFlow;

// A pair of even forms on a 5-chart.
typedef struct GgRho GgRho;

// A grid state and the orbit signs it started in.
typedef struct GgState GgState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gg_version(void);

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *gg_last_error_message(void);

// # Safety
// `s` must be NULL or a string returned by this library that has not been freed.
void gg_string_free(char *s);

// Parses `{"rho1": form, "rho2": form}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum GgStatus gg_rho_from_json(const char *json, struct GgRho **out);

// The constant-coefficient normal form.
//
// # Safety
// `out` must be a writable pointer.
enum GgStatus gg_rho_normal_form(struct GgRho **out);

// # Safety
// `rho` must be NULL or a handle from this library that has not been freed.
void gg_rho_free(struct GgRho *rho);

// # Safety
// `rho` must be a live handle and `out` a writable pointer.
enum GgStatus gg_rho_to_json(const struct GgRho *rho, char **out);

// The quartic invariant `f(ρ)` as a JSON polynomial.
//
// # Safety
// `rho` must be a live handle and `out` a writable pointer.
enum GgStatus gg_rho_quartic_invariant(const struct GgRho *rho, char **out);

// The `spin55 analyze` report as JSON. `passed` receives whether every check passed.
//
// # Safety
// `rho` must be a live handle, `out` a writable pointer, `passed` NULL or writable.
enum GgStatus gg_rho_analyze(const struct GgRho *rho, char **out, bool *passed);

// The `verify identities` report as JSON; `dim = 0` cycles through dimensions 2 to 5.
//
// # Safety
// `out` must be a writable pointer, `passed` NULL or writable.
enum GgStatus gg_verify_identities(size_t dim,
                                   size_t cases,
                                   uint64_t seed,
                                   uint32_t degree,
                                   char **out,
                                   bool *passed);

// A periodic `n⁵` grid.
//
// # Safety
// `out` must be a writable pointer.
enum GgStatus gg_flow_new(size_t n, enum GgScheme scheme, struct GgFlow **out);

// # Safety
// `flow` must be NULL or a handle from this library that has not been freed.
void gg_flow_free(struct GgFlow *flow);

// Initial state `ρ₀ + ε dα`. A NULL `base` selects the normal form and a NULL
// `perturbation` the zero perturbation; otherwise `perturbation` is
// `{"terms": [{"component", "indices", "mode", "cos", "sin"}, ...]}`.
//
// # Safety
// `flow` must be live, `base` NULL or live, `perturbation` NULL or NUL-terminated,
// `out` writable.
enum GgStatus gg_state_new(const struct GgFlow *flow,
                           const struct GgRho *base,
                           double epsilon,
                           const char *perturbation,
                           struct GgState **out);

// # Safety
// `state` must be NULL or a handle from this library that has not been freed.
void gg_state_free(struct GgState *state);

// Current time, or NaN for a NULL handle.
//
// # Safety
// `state` must be NULL or live.
double gg_state_time(const struct GgState *state);

// Number of doubles in the state: 32 components of `n⁵` nodes each.
//
// # Safety
// `state` must be NULL or live.
size_t gg_state_len(const struct GgState *state);

// Copies the component-major state data into `buf`, which holds `len` doubles.
//
// # Safety
// `state` must be live and `buf` valid for `len` writes.
enum GgStatus gg_state_copy(const struct GgState *state, double *buf, size_t len);

// Advances `state` in place by `steps` Runge–Kutta steps of size `dt`. A node
// leaving its starting orbit stops the run with `GG_STATUS_UNSTABLE` and leaves
// the state at the last completed step.
//
// # Safety
// `flow` and `state` must be live handles.
enum GgStatus gg_flow_step(const struct GgFlow *flow,
                           struct GgState *state,
                           double dt,
                           size_t steps);

// The volume functional `V` of the state.
//
// # Safety
// `flow` and `state` must be live handles and `out` writable.
enum GgStatus gg_flow_hamiltonian(const struct GgFlow *flow,
                                  const struct GgState *state,
                                  double *out);

// `max |dρ|` over the grid.
//
// # Safety
// `flow` and `state` must be live handles and `out` writable.
enum GgStatus gg_flow_closure_norm(const struct GgFlow *flow,
                                   const struct GgState *state,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENGEOM_H */
