#ifndef SCHNAK_H
#define SCHNAK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SCHNAK_OK 0

#define SCHNAK_ERR_NULL 1

#define SCHNAK_ERR_INVALID 2

#define SCHNAK_ERR_DIVERGED 3

#define SCHNAK_ERR_NUMERIC 4

#define SCHNAK_ERR_IO 5

#define SCHNAK_ERR_BUFFER 6

#define SCHNAK_ERR_PANIC 7

#define SCHNAK_SCHEME_SV 0

#define SCHNAK_SCHEME_BWE 1

/**
 * Number of values per row written by [`schnak_converge`]:
 * `u_err, v_err, p_err, q_err, minres_mean, sqp_iters`.
 */
#define SCHNAK_CONVERGENCE_COLUMNS 6

/**
 * Result of a control identification run.
 */
typedef struct SchnakIdentification SchnakIdentification;

/**
 * P1 finite element space on the unit square.
 */
typedef struct SchnakMesh SchnakMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none. The string
 * stays valid until the next failing call on the same thread.
 */
const char *schnak_last_error_message(void);

/**
 * Creates an `n x n` mesh with its mass and stiffness matrices.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
int32_t schnak_mesh_new(size_t n, SchnakMesh **out);

/**
 * # Safety
 * `mesh` must come from [`schnak_mesh_new`] and not be used afterwards.
 */
void schnak_mesh_free(SchnakMesh *mesh);

/**
 * Number of mesh nodes, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t schnak_mesh_num_nodes(const SchnakMesh *mesh);

/**
 * Writes node coordinates as interleaved `x, y` pairs.
 *
 * # Safety
 * `mesh` must be a live handle and `xy` must hold `len` doubles.
 */
int32_t schnak_mesh_coords(const SchnakMesh *mesh, double *xy, size_t len);

/**
 * Runs the forward model from the perturbed steady state of `(a, b)` to
 * `t_final` and writes the final `u` and `v` (one value per node each).
 *
 * # Safety
 * `mesh` must be a live handle; `u` and `v` must each hold `len` doubles.
 */
int32_t schnak_forward(const SchnakMesh *mesh,
                       double a,
                       double b,
                       double gamma,
                       double t_final,
                       double dt,
                       double *u,
                       double *v,
                       size_t len);

/**
 * Identifies controls from a target snapshot reached at `t_final`.
 *
 * # Safety
 * `mesh` must be a live handle, `u_target` and `v_target` must each hold
 * `len` doubles and `out` must be writable.
 */
int32_t schnak_identify(const SchnakMesh *mesh,
                        int32_t scheme,
                        double beta,
                        double gamma,
                        double t_final,
                        size_t n_t,
                        const double *u_target,
                        const double *v_target,
                        size_t len,
                        SchnakIdentification **out);

/**
 * # Safety
 * `id` must come from [`schnak_identify`] and not be used afterwards.
 */
void schnak_identification_free(SchnakIdentification *id);

/**
 * Writes the squared norms `|u - u_hat|^2, |v - v_hat|^2, |a|^2, |b|^2`.
 *
 * # Safety
 * `id` must be a live handle and `costs` must hold four doubles.
 */
int32_t schnak_identification_costs(const SchnakIdentification *id, double *costs);

/**
 * Number of SQP iterations taken, or 0 for a null handle.
 *
 * # Safety
 * `id` must be null or a live handle.
 */
size_t schnak_identification_sqp_iterations(const SchnakIdentification *id);

/**
 * Whether the SQP iteration met its tolerance.
 *
 * # Safety
 * `id` must be null or a live handle.
 */
bool schnak_identification_converged(const SchnakIdentification *id);

/**
 * Number of control time points.
 *
 * # Safety
 * `id` must be null or a live handle.
 */
size_t schnak_identification_num_controls(const SchnakIdentification *id);

/**
 * Writes the control time points and the spatial means of `a` and `b`.
 *
 * # Safety
 * `id` must be a live handle; `t`, `mean_a` and `mean_b` must each hold
 * `len` doubles.
 */
int32_t schnak_identification_control_means(const SchnakIdentification *id,
                                            double *t,
                                            double *mean_a,
                                            double *mean_b,
                                            size_t len);

/**
 * Runs the manufactured-solution convergence study on levels
 * `first..=last` and writes [`SCHNAK_CONVERGENCE_COLUMNS`] values per
 * level into `rows`; errors of a failed level are NaN.
 *
 * # Safety
 * `rows` must hold `len` doubles.
 */
int32_t schnak_converge(int32_t scheme,
                        double beta,
                        double gamma,
                        size_t first,
                        size_t last,
                        double *rows,
                        size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHNAK_H */
