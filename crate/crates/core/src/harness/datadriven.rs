use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::{FemSpace, NodalField};
use crate::forward::build_targets;
use crate::model::SchnakenbergParams;
use crate::sqp::{coarsest_guess, run_sqp, RunStats, SqpConfig};
use crate::trajectory::{ProblemData, Scheme, Trajectory};

/// Squared `L2(Q)` norms of the four terms of the cost functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub u_misfit: f64,
    pub v_misfit: f64,
    pub a: f64,
    pub b: f64,
}

impl CostTerms {
    pub fn csv_header() -> &'static str {
        "u_misfit,v_misfit,a_norm,b_norm"
    }

    pub fn csv_fields(&self) -> String {
        format!("{:.6e},{:.6e},{:.6e},{:.6e}", self.u_misfit, self.v_misfit, self.a, self.b)
    }
}

/// Cost terms with the quadrature the discretization itself uses:
/// trapezoid in time for the states, one point per control level for the
/// controls, the mass matrix in space.
pub fn cost_terms(space: &FemSpace, traj: &Trajectory, target_u: &[NodalField], target_v: &[NodalField]) -> Result<CostTerms> {
    let n_t = traj.n_t();
    traj.validate(space.num_nodes())?;
    check_len(n_t + 1, target_u.len(), "target u levels")?;
    check_len(n_t + 1, target_v.len(), "target v levels")?;
    let tau = traj.tau();
    let sq = |f: &[f64]| space.mass_inner(f, f);
    let misfit = |states: &[NodalField], targets: &[NodalField]| -> f64 {
        states
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(i, (s, t))| {
                let w = if i == 0 || i == n_t { 0.5 } else { 1.0 };
                let d: Vec<f64> = s.iter().zip(t).map(|(x, y)| x - y).collect();
                w * sq(&d)
            })
            .sum::<f64>()
            * tau
    };
    let control = |c: &[NodalField]| c.iter().map(|f| sq(f)).sum::<f64>() * tau;
    Ok(CostTerms {
        u_misfit: misfit(&traj.u, target_u),
        v_misfit: misfit(&traj.v, target_v),
        a: control(&traj.a),
        b: control(&traj.b),
    })
}

/// Spatial means of the controls at their time points: `(t, mean a, mean b)`.
pub fn control_means(space: &FemSpace, traj: &Trajectory) -> Vec<(f64, f64, f64)> {
    let ones = vec![1.0; space.num_nodes()];
    traj.control_times()
        .into_iter()
        .zip(traj.a.iter().zip(&traj.b))
        .map(|(t, (a, b))| (t, space.mass_inner(&ones, a), space.mass_inner(&ones, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyConfig {
    pub scheme: Scheme,
    pub beta: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub n_t: usize,
    pub sqp: SqpConfig,
}

impl IdentifyConfig {
    /// `T = 2`, `tau = 1e-2` and the tighter tolerances used for
    /// identification runs.
    pub fn new(scheme: Scheme, beta: f64, gamma: f64) -> Self {
        Self {
            scheme,
            beta,
            gamma,
            t_final: 2.0,
            n_t: 200,
            sqp: SqpConfig {
                tol_sqp: 1e-6,
                tol_minres: 1e-7,
                ..SqpConfig::default()
            },
        }
    }

    pub fn params(&self) -> SchnakenbergParams {
        let mut p = SchnakenbergParams::with_beta(self.beta, self.n_t);
        p.gamma = self.gamma;
        p.t_final = self.t_final;
        p
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub trajectory: Trajectory,
    pub stats: RunStats,
    pub costs: CostTerms,
    pub means: Vec<(f64, f64, f64)>,
    pub data: ProblemData,
}

/// Recovers controls that drive zero initial states towards targets ramping
/// linearly up to the snapshot `(u_final, v_final)` at `t = T`.
pub fn identify(cfg: &IdentifyConfig, space: &FemSpace, u_final: &[f64], v_final: &[f64]) -> Result<Identification> {
    let n_x = space.num_nodes();
    check_len(n_x, u_final.len(), "target snapshot u")?;
    check_len(n_x, v_final.len(), "target snapshot v")?;
    if u_final.iter().chain(v_final).any(|x| !x.is_finite()) {
        return Err(Error::NumericDomain("target snapshot has non-finite values".into()));
    }
    let params = cfg.params();
    params.validate()?;
    let (target_u, target_v) = build_targets(u_final, v_final, cfg.n_t);
    let data = ProblemData {
        u0: vec![0.0; n_x],
        v0: vec![0.0; n_x],
        target_u,
        target_v,
        source_u: None,
        source_v: None,
    };
    let guess = coarsest_guess(cfg.scheme, &data, cfg.t_final);
    let (trajectory, stats) = run_sqp(cfg.scheme, space, &params, &data, &guess, &cfg.sqp)?;
    let costs = cost_terms(space, &trajectory, &data.target_u, &data.target_v)?;
    let means = control_means(space, &trajectory);
    Ok(Identification {
        trajectory,
        stats,
        costs,
        means,
        data,
    })
}
