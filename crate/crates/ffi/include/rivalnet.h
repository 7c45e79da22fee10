#ifndef RIVALNET_H
#define RIVALNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define RN_MECHANISM_NONE 0

#define RN_MECHANISM_TAKEOVER 1

#define RN_MECHANISM_SUBSTITUTION 2

typedef enum RnStatus {
  RN_STATUS_OK = 0,
  RN_STATUS_NULL_POINTER = 1,
  RN_STATUS_CONFIG = 2,
  RN_STATUS_RUNTIME = 3,
  RN_STATUS_INVALID_ARGUMENT = 4,
  RN_STATUS_PANIC = 5,
} RnStatus;

typedef struct RnNetwork RnNetwork;

typedef struct RnSimulation RnSimulation;

/**
 * Dynamics parameters. `dual` switches on the cross thresholds `t_ws` and
 * `t_sw`; `mechanism` is one of the `RN_MECHANISM_*` values.
 */
typedef struct RnParams {
  double p1_s;
  double p1_w;
  double p2;
  uint32_t tau;
  double t_s;
  double t_w;
  bool dual;
  double t_ws;
  double t_sw;
  double n;
  uint32_t mechanism;
  bool cost;
} RnParams;

/**
 * Mean-field system; thresholds are active-neighbour counts.
 */
typedef struct RnMeanField {
  uint32_t k_s;
  uint32_t k_w;
  uint32_t k_ws;
  uint32_t k_sw;
  uint32_t t_s;
  uint32_t t_w;
  double p2_s;
  double p2_w;
  double pstar_s;
  double pstar_w;
} RnMeanField;

typedef struct RnSolver {
  double damping;
  double tolerance;
  uint64_t max_iter;
} RnSolver;

typedef struct RnFixedPoint {
  double a_s;
  double a_w;
  double residual;
  uint64_t iterations;
  bool converged;
} RnFixedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rn_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rn_last_error(void);

/**
 * Generate the network of `replicate` from the `[network]` table and
 * `seed` of a full experiment config document.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string and `out` a valid
 * pointer to writable storage.
 */
enum RnStatus rn_network_from_config(const char *config_toml,
                                     uint64_t replicate,
                                     struct RnNetwork **out);

/**
 * Duplex BA network with the given sizes and attachment counts.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum RnStatus rn_network_ba(size_t nodes_s,
                            size_t nodes_w,
                            size_t n0,
                            size_t m_s,
                            size_t m_w,
                            size_t m_sw,
                            uint64_t seed,
                            uint64_t replicate,
                            struct RnNetwork **out);

/**
 * # Safety
 * `net` must be NULL or a handle from this library that was not freed.
 */
void rn_network_free(struct RnNetwork *net);

/**
 * Node counts of S and W.
 *
 * # Safety
 * `net` must be a live handle; `n_s` and `n_w` valid writable pointers.
 */
enum RnStatus rn_network_nodes(const struct RnNetwork *net, size_t *n_s, size_t *n_w);

/**
 * # Safety
 * `net` must be a live handle; `count` a valid writable pointer.
 */
enum RnStatus rn_network_edge_count(const struct RnNetwork *net, size_t *count);

/**
 * Fill `out` with the library defaults.
 *
 * # Safety
 * `out` must be a valid writable pointer.
 */
enum RnStatus rn_params_default(struct RnParams *out);

/**
 * Start a run from the all-active state. The simulation keeps its own
 * reference to the network, so `net` may be freed afterwards.
 *
 * # Safety
 * `net` must be a live handle, `params` a valid pointer and `out` a valid
 * writable pointer.
 */
enum RnStatus rn_simulation_new(const struct RnNetwork *net,
                                const struct RnParams *params,
                                uint64_t seed,
                                uint64_t replicate,
                                struct RnSimulation **out);

/**
 * # Safety
 * `sim` must be NULL or a live handle.
 */
void rn_simulation_free(struct RnSimulation *sim);

/**
 * Advance `steps` synchronous steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RnStatus rn_simulation_step(struct RnSimulation *sim, uint64_t steps);

/**
 * Replace the internal failure probabilities, e.g. to follow an attack
 * schedule.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RnStatus rn_simulation_set_p1(struct RnSimulation *sim, double p1_s, double p1_w);

/**
 * Active fractions of S and W relative to their initial sizes.
 *
 * # Safety
 * `sim` must be a live handle, `f_s` and `f_w` valid writable pointers.
 */
enum RnStatus rn_simulation_fractions(const struct RnSimulation *sim, double *f_s, double *f_w);

/**
 * Clock, live threshold `T'_S` and cumulative acquisitions.
 *
 * # Safety
 * `sim` must be a live handle; the out pointers must be valid.
 */
enum RnStatus rn_simulation_status(const struct RnSimulation *sim,
                                   uint64_t *clock,
                                   double *threshold_s,
                                   size_t *acquisitions);

/**
 * Damped fixed point from `(init_s, init_w)`. A NULL `solver` uses the
 * library defaults. Running out of iterations is not an error; check
 * `converged`.
 *
 * # Safety
 * `system` and `out` must be valid pointers; `solver` valid or NULL.
 */
enum RnStatus rn_meanfield_solve(const struct RnMeanField *system,
                                 const struct RnSolver *solver,
                                 double init_s,
                                 double init_w,
                                 struct RnFixedPoint *out);

/**
 * Probability that at most `t_abs` of `k_self + k_other` neighbours are
 * active. NaN when a failure fraction lies outside [0, 1].
 */
double rn_crit_prob(double a_self,
                    double a_other,
                    uint32_t k_self,
                    uint32_t k_other,
                    uint32_t t_abs);

/**
 * Threshold after one acquisition of degree `k` under the linear cost law.
 *
 * # Safety
 * `out` must be a valid writable pointer.
 */
enum RnStatus rn_cost_update(double mass, double threshold, double k, double t_w, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIVALNET_H */
