//! Outer SQP loop and the initial guesses used along a mesh hierarchy.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{prolong, FemSpace, MeshP1, NodalField};
use crate::krylov::{minres_with_norm, MinresStatus, ResidualNorm};
use crate::model::SchnakenbergParams;
use crate::system::{self, PrecondConfig};
use crate::trajectory::{adjoint_times, ProblemData, Scheme, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqpConfig {
    /// Stop once the relative change of every variable family is below this.
    pub tol_sqp: f64,
    /// Relative residual for the inner MINRES solves.
    pub tol_minres: f64,
    /// Norm in which the inner residual is measured.
    pub minres_norm: ResidualNorm,
    pub max_sqp_iters: usize,
    pub max_minres_iters: usize,
    /// Factor applied to interpolated coarse solutions.
    pub continuation_scale: f64,
    /// Start MINRES from the previous SQP solution instead of zero.
    pub warm_start: bool,
    #[serde(skip)]
    pub precond: PrecondConfig,
}

impl Default for SqpConfig {
    fn default() -> Self {
        Self {
            tol_sqp: 1e-5,
            tol_minres: 1e-9,
            minres_norm: ResidualNorm::Preconditioned,
            max_sqp_iters: 20,
            max_minres_iters: 1000,
            continuation_scale: 0.8,
            warm_start: true,
            precond: PrecondConfig::default(),
        }
    }
}

impl SqpConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_sqp", self.tol_sqp), ("tol_minres", self.tol_minres)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_sqp_iters == 0 || self.max_minres_iters == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Record of one SQP iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqpIteration {
    pub minres_iterations: usize,
    pub minres_residual: f64,
    pub minres_status: MinresStatus,
    /// Relative change of `(u, v, p, q)` against the previous iterate.
    pub change: [f64; 4],
    /// MINRES relative residual after each inner iteration.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub iterations: Vec<SqpIteration>,
    pub converged: bool,
    /// Seconds spent building systems and preconditioners and in MINRES.
    pub cpu_seconds: f64,
}

impl RunStats {
    pub fn sqp_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn mean_minres(&self) -> f64 {
        if self.iterations.is_empty() {
            return 0.0;
        }
        self.iterations.iter().map(|i| i.minres_iterations as f64).sum::<f64>() / self.iterations.len() as f64
    }

    /// Iterations whose inner solve stopped short of the tolerance.
    pub fn minres_failures(&self) -> usize {
        self.iterations
            .iter()
            .filter(|i| i.minres_status != MinresStatus::Converged)
            .count()
    }
}

/// Runs SQP from `initial` until the iterates stop changing.
///
/// MINRES failures are recorded and the returned iterate is used anyway;
/// the loop ends unconverged after `max_sqp_iters`.
pub fn run_sqp(
    scheme: Scheme,
    space: &FemSpace,
    params: &SchnakenbergParams,
    data: &ProblemData,
    initial: &Trajectory,
    cfg: &SqpConfig,
) -> Result<(Trajectory, RunStats)> {
    cfg.validate()?;
    params.validate()?;
    if initial.scheme != scheme {
        return Err(Error::InvalidArgument(format!(
            "initial guess is a {} trajectory, expected {scheme}",
            initial.scheme
        )));
    }
    let mut lin = initial.clone();
    lin.u[0] = data.u0.clone();
    lin.v[0] = data.v0.clone();
    if scheme == Scheme::BackwardEuler {
        let n_t = lin.n_t();
        lin.p[n_t].iter_mut().chain(lin.q[n_t].iter_mut()).for_each(|x| *x = 0.0);
    }

    let mut stats = RunStats::default();
    for it in 1..=cfg.max_sqp_iters {
        let clock = Instant::now();
        let sys = system::assemble(scheme, space, params, &lin, data)?;
        let pre = sys.preconditioner(&cfg.precond)?;
        // The first iterate is only a guess, not a previous solution; its
        // residual in the preconditioner norm can be misleadingly small.
        let x0 = if cfg.warm_start && it > 1 { Some(sys.pack(&lin)?) } else { None };
        let out = minres_with_norm(
            &*sys,
            &pre,
            sys.rhs(),
            x0.as_deref(),
            cfg.tol_minres,
            cfg.max_minres_iters,
            cfg.minres_norm,
        )?;
        stats.cpu_seconds += clock.elapsed().as_secs_f64();

        if out.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain(format!("non-finite SQP iterate at iteration {it}")));
        }
        let next = sys.unpack(&out.x)?;
        let change = next.relative_change(&lin);
        log::debug!(
            "sqp iteration {it}: minres {} its, residual {:.3e}, change {:?}",
            out.iterations,
            out.relative_residual,
            change
        );
        if out.status != MinresStatus::Converged {
            log::warn!("sqp iteration {it}: minres stopped with {:?}", out.status);
        }
        stats.iterations.push(SqpIteration {
            minres_iterations: out.iterations,
            minres_residual: out.relative_residual,
            minres_status: out.status,
            change,
            residual_history: out.history,
        });
        lin = next;
        if change.iter().all(|c| *c <= cfg.tol_sqp) {
            stats.converged = true;
            break;
        }
    }
    Ok((lin, stats))
}

/// Initial guess on the coarsest mesh: states from the (scaled) desired
/// states, zero adjoints and controls.
pub fn coarsest_guess(scheme: Scheme, data: &ProblemData, t_final: f64) -> Trajectory {
    let n_t = data.n_t();
    let n_x = data.u0.len();
    let scale = match scheme {
        Scheme::StormerVerlet => 1.0,
        Scheme::BackwardEuler => 0.4,
    };
    let mut traj = Trajectory::zeros(scheme, n_t, t_final, n_x);
    for i in 0..=n_t {
        traj.u[i] = data.target_u[i].iter().map(|x| scale * x).collect();
        traj.v[i] = data.target_v[i].iter().map(|x| scale * x).collect();
    }
    traj
}

/// Piecewise-linear interpolation of a time series, extended linearly
/// beyond the first and last samples.
fn interpolate_in_time(times: &[f64], values: &[NodalField], at: f64) -> NodalField {
    if times.len() == 1 {
        return values[0].clone();
    }
    let j = times.partition_point(|&t| t <= at).clamp(1, times.len() - 1);
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (at - t0) / (t1 - t0);
    values[j - 1]
        .iter()
        .zip(&values[j])
        .map(|(a, b)| (1.0 - w) * a + w * b)
        .collect()
}

/// Transfers a coarse solution to a finer mesh and time grid: spatial
/// prolongation, linear interpolation in time on each family's own time
/// points, then multiplication by `scale`.
pub fn continuation_guess(
    prev: &Trajectory,
    coarse: &MeshP1,
    fine: &MeshP1,
    fine_nt: usize,
    scale: f64,
) -> Result<Trajectory> {
    let coarse_nt = prev.n_t();
    if fine_nt == 0 || fine_nt % coarse_nt != 0 {
        return Err(Error::InvalidArgument(format!(
            "time grids are not nested: {fine_nt} steps does not refine {coarse_nt}"
        )));
    }
    prev.validate(coarse.num_nodes())?;
    let scheme = prev.scheme;
    let t_final = prev.t_final;
    let spatial = |fam: &[NodalField]| -> Result<Vec<NodalField>> {
        fam.iter().map(|f| prolong(coarse, fine, f)).collect()
    };
    let (u, v, p, q, a, b) = (
        spatial(&prev.u)?,
        spatial(&prev.v)?,
        spatial(&prev.p)?,
        spatial(&prev.q)?,
        spatial(&prev.a)?,
        spatial(&prev.b)?,
    );

    let mut out = Trajectory::zeros(scheme, fine_nt, t_final, fine.num_nodes());
    let (cs, fs) = (prev.state_times(), out.state_times());
    let (ca, fa) = (adjoint_times(scheme, coarse_nt, t_final), adjoint_times(scheme, fine_nt, t_final));
    let (cc, fc) = (prev.control_times(), out.control_times());
    let fill = |dst: &mut Vec<NodalField>, src: &[NodalField], from: &[f64], to: &[f64]| {
        for (d, &t) in dst.iter_mut().zip(to) {
            *d = interpolate_in_time(from, src, t).into_iter().map(|x| scale * x).collect();
        }
    };
    fill(&mut out.u, &u, &cs, &fs);
    fill(&mut out.v, &v, &cs, &fs);
    fill(&mut out.p, &p, &ca, &fa);
    fill(&mut out.q, &q, &ca, &fa);
    fill(&mut out.a, &a, &cc, &fc);
    fill(&mut out.b, &b, &cc, &fc);
    Ok(out)
}
