#ifndef LOBMARL_H
#define LOBMARL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LobStatus {
  LOB_STATUS_OK = 0,
  LOB_STATUS_NULL_POINTER = 1,
  LOB_STATUS_INVALID_ARGUMENT = 2,
  LOB_STATUS_INSUFFICIENT_DATA = 3,
  LOB_STATUS_DEGENERATE = 4,
  LOB_STATUS_IO = 5,
  LOB_STATUS_CHECKPOINT = 6,
} LobStatus;

// Opaque order book.
typedef struct LobBook LobBook;

// Opaque frozen policy loaded from a checkpoint.
typedef struct LobPolicy LobPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, NUL-terminated description of a status code.
const char *lob_status_message(enum LobStatus status);

// Creates an empty book with the given tick size.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum LobStatus lob_book_new(double tick_size, struct LobBook **out);

// # Safety
// `book` must be null or a handle from [`lob_book_new`] that has not been freed.
void lob_book_free(struct LobBook *book);

// Submits a limit order (positive volume buys, negative sells) and reports the
// number of trades and the volume executed.
//
// # Safety
// `book` must be a live handle; `trades` and `executed` must be valid or null.
enum LobStatus lob_book_submit(struct LobBook *book,
                               uint64_t agent_id,
                               int64_t signed_volume,
                               double price,
                               uint64_t step,
                               uint64_t *trades,
                               int64_t *executed);

// Best bid and ask; a missing side is reported as NaN.
//
// # Safety
// `book` must be a live handle; `bid` and `ask` must be valid pointers.
enum LobStatus lob_book_best_quotes(const struct LobBook *book, double *bid, double *ask);

// Number of resting orders, or 0 for a null handle.
//
// # Safety
// `book` must be null or a live handle.
uint64_t lob_book_order_count(const struct LobBook *book);

// Loads a policy checkpoint from a UTF-8 path.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for one handle.
enum LobStatus lob_policy_load(const char *path, uint64_t seed, struct LobPolicy **out);

// # Safety
// `policy` must be null or a handle from [`lob_policy_load`] that has not been freed.
void lob_policy_free(struct LobPolicy *policy);

// Width of the policy's hidden layers, or 0 for a null handle.
//
// # Safety
// `policy` must be null or a live handle.
uint64_t lob_policy_hidden_width(const struct LobPolicy *policy);

// Maps an 11-component raw observation to a 2-component action in [-1, 1]
// (scaled volume, scaled margin). With `deterministic` set the distribution mean is
// used, otherwise the handle's generator draws a sample.
//
// # Safety
// `obs` must point to 11 doubles and `action` to writable storage for 2.
enum LobStatus lob_policy_act(struct LobPolicy *policy,
                              const double *obs,
                              bool deterministic,
                              double *action);

// Excess kurtosis with population moments.
//
// # Safety
// `data` must point to `n` doubles; `out` must be valid.
enum LobStatus lob_excess_kurtosis(const double *data, uintptr_t n, double *out);

// Hill estimate of the tail exponent from the `k` largest samples.
//
// # Safety
// `data` must point to `n` doubles; `out` must be valid.
enum LobStatus lob_hill_tail_exponent(const double *data, uintptr_t n, uintptr_t k, double *out);

// Exact optimal-transport cost (squared Euclidean, uniform weights) between two point
// clouds stored row-major with `dim` columns.
//
// # Safety
// `a` must point to `n_a * dim` doubles and `b` to `n_b * dim`; `out` must be valid.
enum LobStatus lob_ot_distance(const double *a,
                               uintptr_t n_a,
                               const double *b,
                               uintptr_t n_b,
                               uintptr_t dim,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOBMARL_H */
