//! C ABI over `schnak-core`.
//!
//! Every fallible function returns an `i32` status, `SCHNAK_OK` on success.
//! On failure a message is kept per thread and can be read with
//! [`schnak_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use schnak_core::fem::FemSpace;
use schnak_core::forward::{garvie_init, simulate, ForwardConfig};
use schnak_core::harness::{convergence_study, identify, ConvergenceConfig, Identification, IdentifyConfig};
use schnak_core::sqp::SqpConfig;
use schnak_core::trajectory::Scheme;
use schnak_core::Error;

pub const SCHNAK_OK: i32 = 0;
pub const SCHNAK_ERR_NULL: i32 = 1;
pub const SCHNAK_ERR_INVALID: i32 = 2;
pub const SCHNAK_ERR_DIVERGED: i32 = 3;
pub const SCHNAK_ERR_NUMERIC: i32 = 4;
pub const SCHNAK_ERR_IO: i32 = 5;
pub const SCHNAK_ERR_BUFFER: i32 = 6;
pub const SCHNAK_ERR_PANIC: i32 = 7;

pub const SCHNAK_SCHEME_SV: i32 = 0;
pub const SCHNAK_SCHEME_BWE: i32 = 1;

/// Number of values per row written by [`schnak_converge`]:
/// `u_err, v_err, p_err, q_err, minres_mean, sqp_iters`.
pub const SCHNAK_CONVERGENCE_COLUMNS: usize = 6;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::DimensionMismatch { .. } => SCHNAK_ERR_INVALID,
            Error::Diverged { .. } => SCHNAK_ERR_DIVERGED,
            Error::NumericDomain(_) | Error::Singular(_) => SCHNAK_ERR_NUMERIC,
            Error::Io(_) | Error::Json(_) => SCHNAK_ERR_IO,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SCHNAK_ERR_NULL, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SCHNAK_OK,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SCHNAK_ERR_PANIC
        }
    }
}

fn scheme_of(code: i32) -> Result<Scheme, Failure> {
    match code {
        SCHNAK_SCHEME_SV => Ok(Scheme::StormerVerlet),
        SCHNAK_SCHEME_BWE => Ok(Scheme::BackwardEuler),
        _ => Err(Failure(SCHNAK_ERR_INVALID, format!("unknown scheme code {code}"))),
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Failure(SCHNAK_ERR_BUFFER, format!("{what} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// Message of the last failure on this thread, or null if none. The string
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn schnak_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// P1 finite element space on the unit square.
pub struct SchnakMesh {
    space: FemSpace,
}

/// Result of a control identification run.
pub struct SchnakIdentification {
    result: Identification,
}

/// Creates an `n x n` mesh with its mass and stiffness matrices.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn schnak_mesh_new(n: usize, out: *mut *mut SchnakMesh) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let space = FemSpace::new(n)?;
        *out = Box::into_raw(Box::new(SchnakMesh { space }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from [`schnak_mesh_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn schnak_mesh_free(mesh: *mut SchnakMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of mesh nodes, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schnak_mesh_num_nodes(mesh: *const SchnakMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.space.num_nodes())
}

/// Writes node coordinates as interleaved `x, y` pairs.
///
/// # Safety
/// `mesh` must be a live handle and `xy` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn schnak_mesh_coords(mesh: *const SchnakMesh, xy: *mut f64, len: usize) -> i32 {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let coords = m.space.mesh.coords();
        let out = output(xy, len, 2 * coords.len(), "xy")?;
        for (o, c) in out.chunks_exact_mut(2).zip(coords) {
            o.copy_from_slice(c);
        }
        Ok(())
    })
}

/// Runs the forward model from the perturbed steady state of `(a, b)` to
/// `t_final` and writes the final `u` and `v` (one value per node each).
///
/// # Safety
/// `mesh` must be a live handle; `u` and `v` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn schnak_forward(
    mesh: *const SchnakMesh,
    a: f64,
    b: f64,
    gamma: f64,
    t_final: f64,
    dt: f64,
    u: *mut f64,
    v: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let n_x = m.space.num_nodes();
        let (u, v) = (output(u, len, n_x, "u")?, output(v, len, n_x, "v")?);
        let mut cfg = ForwardConfig::new(a, b, gamma, m.space.mesh.n());
        cfg.t_final = t_final;
        cfg.dt = dt;
        cfg.snapshot_times = vec![t_final];
        let (u0, v0) = garvie_init(a, b, &m.space.mesh, &cfg.perturbation)?;
        let snap = simulate(&cfg, &m.space, &u0, &v0)?.snapshots.remove(0);
        u.copy_from_slice(&snap.u);
        v.copy_from_slice(&snap.v);
        Ok(())
    })
}

/// Identifies controls from a target snapshot reached at `t_final`.
///
/// # Safety
/// `mesh` must be a live handle, `u_target` and `v_target` must each hold
/// `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schnak_identify(
    mesh: *const SchnakMesh,
    scheme: i32,
    beta: f64,
    gamma: f64,
    t_final: f64,
    n_t: usize,
    u_target: *const f64,
    v_target: *const f64,
    len: usize,
    out: *mut *mut SchnakIdentification,
) -> i32 {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (ut, vt) = (input(u_target, len, "u_target")?, input(v_target, len, "v_target")?);
        let mut cfg = IdentifyConfig::new(scheme_of(scheme)?, beta, gamma);
        cfg.t_final = t_final;
        cfg.n_t = n_t;
        let result = identify(&cfg, &m.space, ut, vt)?;
        *out = Box::into_raw(Box::new(SchnakIdentification { result }));
        Ok(())
    })
}

/// # Safety
/// `id` must come from [`schnak_identify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_free(id: *mut SchnakIdentification) {
    if !id.is_null() {
        drop(Box::from_raw(id));
    }
}

/// Writes the squared norms `|u - u_hat|^2, |v - v_hat|^2, |a|^2, |b|^2`.
///
/// # Safety
/// `id` must be a live handle and `costs` must hold four doubles.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_costs(id: *const SchnakIdentification, costs: *mut f64) -> i32 {
    guard(|| {
        let r = &id.as_ref().ok_or_else(|| null("identification"))?.result;
        let out = output(costs, 4, 4, "costs")?;
        out.copy_from_slice(&[r.costs.u_misfit, r.costs.v_misfit, r.costs.a, r.costs.b]);
        Ok(())
    })
}

/// Number of SQP iterations taken, or 0 for a null handle.
///
/// # Safety
/// `id` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_sqp_iterations(id: *const SchnakIdentification) -> usize {
    id.as_ref().map_or(0, |r| r.result.stats.sqp_iterations())
}

/// Whether the SQP iteration met its tolerance.
///
/// # Safety
/// `id` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_converged(id: *const SchnakIdentification) -> bool {
    id.as_ref().is_some_and(|r| r.result.stats.converged)
}

/// Number of control time points.
///
/// # Safety
/// `id` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_num_controls(id: *const SchnakIdentification) -> usize {
    id.as_ref().map_or(0, |r| r.result.means.len())
}

/// Writes the control time points and the spatial means of `a` and `b`.
///
/// # Safety
/// `id` must be a live handle; `t`, `mean_a` and `mean_b` must each hold
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn schnak_identification_control_means(
    id: *const SchnakIdentification,
    t: *mut f64,
    mean_a: *mut f64,
    mean_b: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let r = &id.as_ref().ok_or_else(|| null("identification"))?.result;
        let k = r.means.len();
        let (t, ma, mb) = (output(t, len, k, "t")?, output(mean_a, len, k, "mean_a")?, output(mean_b, len, k, "mean_b")?);
        for (i, &(ti, a, b)) in r.means.iter().enumerate() {
            t[i] = ti;
            ma[i] = a;
            mb[i] = b;
        }
        Ok(())
    })
}

/// Runs the manufactured-solution convergence study on levels
/// `first..=last` and writes [`SCHNAK_CONVERGENCE_COLUMNS`] values per
/// level into `rows`; errors of a failed level are NaN.
///
/// # Safety
/// `rows` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn schnak_converge(
    scheme: i32,
    beta: f64,
    gamma: f64,
    first: usize,
    last: usize,
    rows: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        if first == 0 || last < first {
            return Err(Failure(SCHNAK_ERR_INVALID, format!("invalid level range {first}..={last}")));
        }
        let out = output(rows, len, (last - first + 1) * SCHNAK_CONVERGENCE_COLUMNS, "rows")?;
        let cfg = ConvergenceConfig {
            scheme: scheme_of(scheme)?,
            beta,
            gamma,
            t_final: 1.0,
            levels: first..=last,
            sqp: SqpConfig::default(),
        };
        let result = convergence_study(&cfg, |_, _| {})?;
        for (row, dst) in result.iter().zip(out.chunks_exact_mut(SCHNAK_CONVERGENCE_COLUMNS)) {
            let errs = row.errors.map_or([f64::NAN; 4], |e| e.as_array());
            dst[..4].copy_from_slice(&errs);
            dst[4] = row.stats.mean_minres();
            dst[5] = row.stats.sqp_iterations() as f64;
        }
        Ok(())
    })
}
