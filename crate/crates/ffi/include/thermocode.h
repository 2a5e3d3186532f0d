#ifndef THERMOCODE_H
#define THERMOCODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_DIMENSION_MISMATCH = 3,
  TC_STATUS_INVALID_STATE = 4,
  TC_STATUS_NOT_UNITARY = 5,
  TC_STATUS_THIRD_LAW = 6,
  TC_STATUS_INDIVISIBLE = 7,
  TC_STATUS_BUFFER_TOO_SMALL = 8,
  TC_STATUS_PANIC = 9,
} TcStatus;

/**
 * An evaluated protocol instance.
 */
typedef struct TcInstance TcInstance;

/**
 * Heat and entropy bookkeeping of one encoding round, in bits.
 */
typedef struct TcLedger {
  double delta_s_system;
  double delta_s_register;
  double heat_beta_q;
  double rel_entropy_d;
  double holevo_chi;
  double free_energy_beta_delta_f;
  double entropy_identity_residual;
  double heat_identity_residual;
} TcLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tc_version(void);

/**
 * Builds and evaluates an instance.
 *
 * `energies` holds `n_levels` ascending single-copy energies. When
 * `probabilities` is non-null it holds `n` message probabilities; otherwise
 * the register is a Haar-rotated thermal state drawn from `seed`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
enum TcStatus tc_instance_new(const double *energies,
                              size_t n_levels,
                              double beta,
                              size_t n,
                              size_t copies,
                              const double *probabilities,
                              uint64_t seed,
                              struct TcInstance **out);

/**
 * Builds an instance from its JSON description
 * (`{"hamiltonian": {"energies": [...]}, "beta", "n", "copies", "register": {...}}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TcStatus tc_instance_from_json(const char *json, struct TcInstance **out);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `instance` must come from this library and not be used afterwards.
 */
void tc_instance_free(struct TcInstance *instance);

/**
 * Number of message letters `n`.
 *
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_letters(const struct TcInstance *instance, size_t *out);

/**
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_c_max(const struct TcInstance *instance, double *out);

/**
 * Success probability of the block-projective decoder.
 *
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_success_probability(const struct TcInstance *instance, double *out);

/**
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_holevo(const struct TcInstance *instance, double *out);

/**
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_mutual_information(const struct TcInstance *instance, double *out);

/**
 * # Safety
 * `instance` must be live; `out` writable.
 */
enum TcStatus tc_instance_ledger(const struct TcInstance *instance, struct TcLedger *out);

/**
 * Copies `p(y|x)` row-major (`buf[y*n + x]`). `required` receives `n*n`
 * even when `buf` is too small, in which case nothing is copied.
 *
 * # Safety
 * `buf` must hold `len` doubles (may be null when `len` is 0); `required` writable.
 */
enum TcStatus tc_instance_conditional(const struct TcInstance *instance,
                                      double *buf,
                                      size_t len,
                                      size_t *required);

/**
 * Full evaluation record as JSON.
 *
 * # Safety
 * `instance` must be live; `out` writable. Free the result with `tc_string_free`.
 */
enum TcStatus tc_instance_to_json(const struct TcInstance *instance, char **out);

/**
 * Runs the verification suite on an experiment config (null selects the
 * built-in grid) and returns the JSON report. `passed` receives 1 when every
 * law holds and 0 otherwise.
 *
 * # Safety
 * `config_json` is null or NUL-terminated; `report` and `passed` writable.
 */
enum TcStatus tc_verify_json(const char *config_json, char **report, int *passed);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void tc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOCODE_H */
