#ifndef CFMMGEO_H
#define CFMMGEO_H

/* Generated from the Rust sources by cbindgen; edit those instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define CFMM_OK 0

/**
 * A required pointer was null.
 */
#define CFMM_ERR_NULL 1

/**
 * The JSON description failed to parse or was not valid UTF-8.
 */
#define CFMM_ERR_PARSE 2

/**
 * A domain precondition was violated (bad shape, reserves outside the
 * set, invalid parameter).
 */
#define CFMM_ERR_DOMAIN 3

/**
 * An iterative routine did not converge within its budget.
 */
#define CFMM_ERR_NO_CONVERGENCE 4

/**
 * The operation is not defined for this set or dimension.
 */
#define CFMM_ERR_UNSUPPORTED 5

/**
 * An internal invariant failed; the out parameters are untouched.
 */
#define CFMM_ERR_INTERNAL 6

/**
 * Opaque reachable set handle.
 */
typedef struct CfmmSet CfmmSet;

/**
 * Opaque trading set handle: a pool snapshot with reserves and a fee.
 */
typedef struct CfmmTrading CfmmTrading;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a reachable set from a JSON pool description.
 *
 * On success writes a handle to `out` and returns [`CFMM_OK`]; the handle
 * must be released with [`cfmm_set_free`].
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to a writable
 * pointer slot; both must be non-null.
 */
int32_t cfmm_set_from_json(const char *json, struct CfmmSet **out);

/**
 * Release a set handle. Null is ignored.
 *
 * # Safety
 * `set` must be a pointer returned by [`cfmm_set_from_json`] that has not
 * been freed already.
 */
void cfmm_set_free(struct CfmmSet *set);

/**
 * Number of assets the set prices.
 *
 * # Safety
 * `set` must be a live handle from [`cfmm_set_from_json`].
 */
size_t cfmm_set_dim(const struct CfmmSet *set);

/**
 * Membership test. Writes 1 or 0 to `out`.
 *
 * # Safety
 * `set` must be a live handle, `reserves` must point to `len` doubles,
 * and `out` must be writable.
 */
int32_t cfmm_set_contains(const struct CfmmSet *set,
                          const double *reserves,
                          size_t len,
                          int32_t *out);

/**
 * Evaluate the trading function at `reserves`.
 *
 * # Safety
 * `set` must be a live handle, `reserves` must point to `len` doubles,
 * and `out` must be writable.
 */
int32_t cfmm_phi(const struct CfmmSet *set, const double *reserves, size_t len, double *out);

/**
 * Evaluate the portfolio value at `prices`.
 *
 * # Safety
 * `set` must be a live handle, `prices` must point to `len` doubles, and
 * `out` must be writable.
 */
int32_t cfmm_portfolio_value(const struct CfmmSet *set,
                             const double *prices,
                             size_t len,
                             double *out);

/**
 * Marginal prices at `reserves`, normalized so the last asset is the
 * numeraire. Writes `len` doubles to `out`.
 *
 * # Safety
 * `set` must be a live handle; `reserves` and `out` must each point to
 * `len` doubles, with `out` writable.
 */
int32_t cfmm_marginal_prices(const struct CfmmSet *set,
                             const double *reserves,
                             size_t len,
                             double *out);

/**
 * Snapshot a pool into a trading set at given reserves with fee retention
 * `gamma` in [0, 1].
 *
 * On success writes a handle to `out`; release it with
 * [`cfmm_trading_free`]. The set handle stays owned by the caller and may
 * be freed independently afterwards.
 *
 * # Safety
 * `set` must be a live handle, `reserves` must point to `len` doubles,
 * and `out` must be a writable pointer slot.
 */
int32_t cfmm_trading_new(const struct CfmmSet *set,
                         const double *reserves,
                         size_t len,
                         double gamma,
                         struct CfmmTrading **out);

/**
 * Release a trading handle. Null is ignored.
 *
 * # Safety
 * `t` must be a pointer returned by [`cfmm_trading_new`] that has not
 * been freed already.
 */
void cfmm_trading_free(struct CfmmTrading *t);

/**
 * Feasibility of a trade (positive entries received by the trader).
 * Writes 1 or 0 to `out`.
 *
 * # Safety
 * `t` must be a live handle, `delta` must point to `len` doubles, and
 * `out` must be writable.
 */
int32_t cfmm_trade_feasible(const struct CfmmTrading *t,
                            const double *delta,
                            size_t len,
                            int32_t *out);

/**
 * Convex trading function of a trade: the smallest downscaling that makes
 * it acceptable.
 *
 * # Safety
 * `t` must be a live handle, `delta` must point to `len` doubles, and
 * `out` must be writable.
 */
int32_t cfmm_trade_phi(const struct CfmmTrading *t, const double *delta, size_t len, double *out);

/**
 * Most profitable single trade against external prices. Writes the profit
 * to `out_profit` and the trade to `out_trade` (`len` doubles).
 *
 * # Safety
 * `t` must be a live handle; `prices` and `out_trade` must each point to
 * `len` doubles; `out_profit` and `out_trade` must be writable.
 */
int32_t cfmm_arb(const struct CfmmTrading *t,
                 const double *prices,
                 size_t len,
                 double *out_profit,
                 double *out_trade);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFMMGEO_H */
