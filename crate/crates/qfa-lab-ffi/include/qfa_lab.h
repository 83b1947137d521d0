#ifndef QFA_LAB_H
#define QFA_LAB_H

/* Generated by cbindgen from the qfa-lab-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this library.
 */
typedef enum QfaStatus {
  /**
   * The call succeeded.
   */
  QFA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QFA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  QFA_STATUS_INVALID_UTF8 = 2,
  /**
   * The machine text did not parse or did not assemble into a machine.
   */
  QFA_STATUS_PARSE = 3,
  /**
   * The machine file could not be read.
   */
  QFA_STATUS_IO = 4,
  /**
   * The input string uses a symbol outside the machine's alphabet.
   */
  QFA_STATUS_INPUT_SYMBOL = 5,
  /**
   * The machine failed its well-formedness conditions.
   */
  QFA_STATUS_MALFORMED = 6,
  /**
   * The run itself failed (for example, a dimension mismatch).
   */
  QFA_STATUS_RUN = 7,
  /**
   * An internal panic was caught at the boundary.
   */
  QFA_STATUS_PANIC = 8,
} QfaStatus;

/**
 * An opaque loaded machine. Created by [`qfa_machine_from_text`] or
 * [`qfa_machine_from_file`], released by [`qfa_machine_free`].
 */
typedef struct QfaMachine QfaMachine;

/**
 * Outcome of running a machine on one input string.
 *
 * Real-time machines read the framed input once, so `steps` is the
 * input length plus two and `converged` is always true. The
 * generalized automaton has no probability semantics: its raw value is
 * reported as `p_acc`, with `p_rej = 1 - p_acc` and zero residual. For
 * two-way machines `residual` is the nonhalting mass left when the run
 * stopped, and `converged` says whether that mass fell below the
 * requested tolerance within the step budget.
 */
typedef struct QfaRunOutcome {
  /**
   * Accumulated acceptance probability (raw value for `gfa`).
   */
  double p_acc;
  /**
   * Accumulated rejection probability.
   */
  double p_rej;
  /**
   * Nonhalting mass remaining at the end of the run.
   */
  double residual;
  /**
   * Evolution steps taken.
   */
  uint64_t steps;
  /**
   * Whether the residual fell below the tolerance in time.
   */
  bool converged;
} QfaRunOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last failure message from this thread, as a NUL-terminated string.
 *
 * Never null; empty until the first failing call. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *qfa_last_error(void);

/**
 * Version of the underlying library, as a static NUL-terminated string.
 */
const char *qfa_version(void);

/**
 * Parse machine text and build the machine it describes.
 *
 * On success, writes an owned handle to `*out` and returns
 * `QFA_STATUS_OK`. The handle must be released with
 * [`qfa_machine_free`].
 *
 * # Safety
 * `text` must be a valid NUL-terminated C string and `out` a valid
 * pointer to writable memory.
 */
enum QfaStatus qfa_machine_from_text(const char *text, struct QfaMachine **out);

/**
 * Read a machine file from disk and build the machine it describes.
 *
 * # Safety
 * `path` must be a valid NUL-terminated C string and `out` a valid
 * pointer to writable memory.
 */
enum QfaStatus qfa_machine_from_file(const char *path, struct QfaMachine **out);

/**
 * Release a handle returned by one of the constructors. Null is a
 * permitted no-op.
 *
 * # Safety
 * `m` must be null or a pointer obtained from a constructor in this
 * library that has not been freed already.
 */
void qfa_machine_free(struct QfaMachine *m);

/**
 * The machine's type keyword (`rt-pfa`, `gfa`, `rt-qfa`, `rt-kwqfa`,
 * `kwqfa-1way`, or `kwqfa-2way`), valid for the handle's lifetime.
 * Null if `m` is null.
 *
 * # Safety
 * `m` must be null or a live handle from this library.
 */
const char *qfa_machine_type(const struct QfaMachine *m);

/**
 * Number of states, or 0 if `m` is null.
 *
 * # Safety
 * `m` must be null or a live handle from this library.
 */
size_t qfa_machine_state_count(const struct QfaMachine *m);

/**
 * Check the machine's well-formedness conditions (stochasticity,
 * trace preservation, or unitarity, by type).
 *
 * Returns `QFA_STATUS_OK` when every condition holds. On
 * `QFA_STATUS_MALFORMED` the full violation report is available from
 * [`qfa_last_error`]. The generalized automaton has no numeric
 * conditions and always passes.
 *
 * # Safety
 * `m` must be a live handle from this library.
 */
enum QfaStatus qfa_machine_check(const struct QfaMachine *m);

/**
 * Run the machine on `input` and write the outcome to `*out`.
 *
 * `tol` is the residual tolerance for two-way runs; any value at or
 * below zero selects the default (1e-12). `max_steps` is the two-way
 * step budget; zero selects the default (100000). Real-time machines
 * ignore both.
 *
 * A symbol outside the machine's alphabet yields
 * `QFA_STATUS_INPUT_SYMBOL`. A two-way run that exhausts its budget is
 * not an error: it returns `QFA_STATUS_OK` with `converged` false.
 *
 * # Safety
 * `m` must be a live handle from this library, `input` a valid
 * NUL-terminated C string, and `out` a valid pointer to writable
 * memory.
 */
enum QfaStatus qfa_machine_run(const struct QfaMachine *m,
                               const char *input,
                               double tol,
                               uint64_t max_steps,
                               struct QfaRunOutcome *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFA_LAB_H */
