use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{interpolate_nodal, FemSpace, MeshP1, NodalField};
use crate::model::{ManufacturedCase, SchnakenbergParams};
use crate::sqp::{coarsest_guess, continuation_guess, run_sqp, RunStats, SqpConfig};
use crate::trajectory::{ProblemData, Scheme, Trajectory};

/// Cells per side on level `i >= 1`: `h = 2^{1-i} / 10`.
pub fn level_mesh_size(level: usize) -> usize {
    10 << (level - 1)
}

/// Time steps on level `i` for `T = t_final`.
pub fn level_steps(scheme: Scheme, level: usize, t_final: f64) -> usize {
    let h = 1.0 / level_mesh_size(level) as f64;
    (t_final / scheme.step_for_mesh(h)).round() as usize
}

/// `max_i h |x^i - exact(t_i)|_2` over the given time points.
pub fn weighted_error<F>(mesh: &MeshP1, field: &[NodalField], times: &[f64], exact: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if field.len() != times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: field.len(),
            context: "time levels of weighted error",
        });
    }
    let mut worst: f64 = 0.0;
    for (f, &t) in field.iter().zip(times) {
        let e = interpolate_nodal(mesh, |x, y| exact(t, x, y))?;
        let d = f.iter().zip(&e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(mesh.h() * d);
    }
    Ok(worst)
}

/// Initial data, desired states and sources of the manufactured solution.
pub fn manufactured_problem(space: &FemSpace, params: &SchnakenbergParams) -> Result<ProblemData> {
    let case = ManufacturedCase::from_params(params);
    let mesh = &space.mesh;
    let tau = params.tau();
    let times: Vec<f64> = (0..=params.n_t).map(|i| i as f64 * tau).collect();
    let nodal = |f: &dyn Fn(f64, f64, f64) -> f64| -> Result<Vec<NodalField>> {
        times.iter().map(|&t| interpolate_nodal(mesh, |x, y| f(t, x, y))).collect()
    };
    Ok(ProblemData {
        // Initial data enter as L2 projections, targets and sources as nodal values.
        u0: space.project(|x, y| case.u(0.0, x, y))?,
        v0: space.project(|x, y| case.v(0.0, x, y))?,
        target_u: nodal(&|t, x, y| case.targets(t, x, y).0)?,
        target_v: nodal(&|t, x, y| case.targets(t, x, y).1)?,
        source_u: Some(nodal(&|t, x, y| case.sources(t, x, y).0)?),
        source_v: Some(nodal(&|t, x, y| case.sources(t, x, y).1)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub scheme: Scheme,
    pub beta: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub levels: std::ops::RangeInclusive<usize>,
    pub sqp: SqpConfig,
}

/// Weighted errors of `(u, v, p, q)` against the manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelErrors {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub q: f64,
}

impl LevelErrors {
    pub fn as_array(&self) -> [f64; 4] {
        [self.u, self.v, self.p, self.q]
    }

    pub fn compute(mesh: &MeshP1, traj: &Trajectory, case: &ManufacturedCase) -> Result<Self> {
        let st = traj.state_times();
        let at = traj.adjoint_times();
        Ok(Self {
            u: weighted_error(mesh, &traj.u, &st, |t, x, y| case.u(t, x, y))?,
            v: weighted_error(mesh, &traj.v, &st, |t, x, y| case.v(t, x, y))?,
            p: weighted_error(mesh, &traj.p, &at, |t, x, y| case.p(t, x, y))?,
            q: weighted_error(mesh, &traj.q, &at, |t, x, y| case.q(t, x, y))?,
        })
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dof: usize,
    /// `None` when the level failed; the study continues from scratch.
    pub errors: Option<LevelErrors>,
    pub stats: RunStats,
    pub wall_seconds: f64,
}

impl ConvergenceRow {
    pub fn csv_header() -> &'static str {
        "level,dof,u_err,v_err,p_err,q_err,minres_mean,sqp_iters,cpu_s"
    }

    pub fn csv_line(&self) -> String {
        let e = |f: fn(&LevelErrors) -> f64| self.errors.as_ref().map_or("nan".to_string(), |x| format!("{:.6e}", f(x)));
        format!(
            "{},{},{},{},{},{},{:.2},{},{:.3}",
            self.level,
            self.dof,
            e(|x| x.u),
            e(|x| x.v),
            e(|x| x.p),
            e(|x| x.q),
            self.stats.mean_minres(),
            self.stats.sqp_iterations(),
            self.stats.cpu_seconds
        )
    }
}

/// Solves the manufactured problem on each level, starting the finer
/// levels from the scaled interpolant of the previous solution.
///
/// `on_row` sees each row as soon as its level finishes.
pub fn convergence_study(
    cfg: &ConvergenceConfig,
    mut on_row: impl FnMut(&ConvergenceRow, Option<&Trajectory>),
) -> Result<Vec<ConvergenceRow>> {
    if cfg.levels.is_empty() || *cfg.levels.start() == 0 {
        return Err(Error::InvalidArgument("levels start at 1".into()));
    }
    let mut rows = Vec::new();
    let mut prev: Option<(MeshP1, Trajectory)> = None;
    for level in cfg.levels.clone() {
        let clock = Instant::now();
        let n = level_mesh_size(level);
        let n_t = level_steps(cfg.scheme, level, cfg.t_final);
        let mut params = SchnakenbergParams::with_beta(cfg.beta, n_t);
        params.gamma = cfg.gamma;
        params.t_final = cfg.t_final;
        let space = FemSpace::new(n)?;
        let data = manufactured_problem(&space, &params)?;
        let guess = match &prev {
            Some((mesh, traj)) => continuation_guess(traj, mesh, &space.mesh, n_t, cfg.sqp.continuation_scale)?,
            None => coarsest_guess(cfg.scheme, &data, cfg.t_final),
        };
        let dof = cfg.scheme.dof(n_t, space.num_nodes());
        log::info!("level {level}: n = {n}, N_t = {n_t}, {dof} unknowns");
        let row = match run_sqp(cfg.scheme, &space, &params, &data, &guess, &cfg.sqp) {
            Ok((traj, stats)) => {
                let case = ManufacturedCase::from_params(&params);
                let errors = LevelErrors::compute(&space.mesh, &traj, &case)?;
                let row = ConvergenceRow {
                    level,
                    dof,
                    errors: Some(errors),
                    stats,
                    wall_seconds: clock.elapsed().as_secs_f64(),
                };
                on_row(&row, Some(&traj));
                prev = Some((space.mesh.clone(), traj));
                row
            }
            Err(e) => {
                log::error!("level {level} failed: {e}");
                prev = None;
                let row = ConvergenceRow {
                    level,
                    dof,
                    errors: None,
                    stats: RunStats::default(),
                    wall_seconds: clock.elapsed().as_secs_f64(),
                };
                on_row(&row, None);
                row
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
