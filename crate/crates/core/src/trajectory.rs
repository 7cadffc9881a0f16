//! Space-time fields of states, adjoints and controls.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::NodalField;

/// Time discretization of the optimality system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Staggered scheme: states at integer steps, adjoints and controls at
    /// half steps.
    StormerVerlet,
    /// Implicit Euler for states and adjoints, all at integer steps.
    BackwardEuler,
}

impl Scheme {
    /// Step size used with mesh width `h` in the convergence studies.
    pub fn step_for_mesh(self, h: f64) -> f64 {
        match self {
            Scheme::StormerVerlet => h / 5.0,
            Scheme::BackwardEuler => 2.0 * h * h,
        }
    }

    /// Number of unknowns of the all-at-once system.
    pub fn dof(self, n_t: usize, n_x: usize) -> usize {
        match self {
            Scheme::StormerVerlet => 4 * n_t * n_x,
            Scheme::BackwardEuler => 4 * n_t.saturating_sub(1) * n_x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StormerVerlet => "sv",
            Scheme::BackwardEuler => "bwe",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sv" | "stormer-verlet" => Ok(Scheme::StormerVerlet),
            "bwe" | "backward-euler" => Ok(Scheme::BackwardEuler),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}' (expected sv or bwe)"))),
        }
    }
}

/// States, adjoints and controls on the time grid of a scheme.
///
/// `u` and `v` hold steps `0..=N_t`. For the staggered scheme `p[0]` is the
/// adjoint at `t = 0` and `p[k]`, `k >= 1`, the adjoint at `(k - 1/2) tau`;
/// controls `a[k]` sit at `(k + 1/2) tau`. For backward Euler `p[k]` is the
/// adjoint at `k tau` (with `p[N_t] = 0`) and `a[k]` the control at
/// `(k + 1) tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub t_final: f64,
    pub u: Vec<NodalField>,
    pub v: Vec<NodalField>,
    pub p: Vec<NodalField>,
    pub q: Vec<NodalField>,
    pub a: Vec<NodalField>,
    pub b: Vec<NodalField>,
}

impl Trajectory {
    pub fn zeros(scheme: Scheme, n_t: usize, t_final: f64, n_x: usize) -> Self {
        let z = |len| vec![vec![0.0; n_x]; len];
        Self {
            scheme,
            t_final,
            u: z(n_t + 1),
            v: z(n_t + 1),
            p: z(n_t + 1),
            q: z(n_t + 1),
            a: z(n_t),
            b: z(n_t),
        }
    }

    pub fn n_t(&self) -> usize {
        self.u.len() - 1
    }

    pub fn n_x(&self) -> usize {
        self.u[0].len()
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_t() as f64
    }

    pub fn state_times(&self) -> Vec<f64> {
        let tau = self.tau();
        (0..=self.n_t()).map(|i| i as f64 * tau).collect()
    }

    pub fn adjoint_times(&self) -> Vec<f64> {
        adjoint_times(self.scheme, self.n_t(), self.t_final)
    }

    pub fn control_times(&self) -> Vec<f64> {
        let tau = self.tau();
        match self.scheme {
            Scheme::StormerVerlet => (0..self.n_t()).map(|k| (k as f64 + 0.5) * tau).collect(),
            Scheme::BackwardEuler => (0..self.n_t()).map(|k| (k + 1) as f64 * tau).collect(),
        }
    }

    /// Sets `a = gamma / beta1 p` and `b = gamma / beta2 q` at the control
    /// time points.
    pub fn recover_controls(&mut self, gamma: f64, beta1: f64, beta2: f64) {
        let n_t = self.n_t();
        for k in 0..n_t {
            self.a[k] = self.p[k + 1].iter().map(|x| gamma / beta1 * x).collect();
            self.b[k] = self.q[k + 1].iter().map(|x| gamma / beta2 * x).collect();
        }
    }

    pub fn validate(&self, n_x: usize) -> Result<()> {
        let n_t = self.n_t();
        if n_t == 0 {
            return Err(Error::InvalidArgument("trajectory needs at least one time step".into()));
        }
        for (fam, len) in [(&self.u, n_t + 1), (&self.v, n_t + 1), (&self.p, n_t + 1), (&self.q, n_t + 1)] {
            check_len(len, fam.len(), "trajectory time levels")?;
            for f in fam {
                check_len(n_x, f.len(), "trajectory field")?;
            }
        }
        for fam in [&self.a, &self.b] {
            check_len(n_t, fam.len(), "trajectory control levels")?;
        }
        Ok(())
    }

    /// Relative l2 change per family `(u, v, p, q)` against `prev`.
    pub fn relative_change(&self, prev: &Trajectory) -> [f64; 4] {
        let rel = |new: &[NodalField], old: &[NodalField]| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (a, b) in new.iter().zip(old) {
                for (x, y) in a.iter().zip(b) {
                    num += (x - y) * (x - y);
                    den += y * y;
                }
            }
            num.sqrt() / den.sqrt().max(1e-30)
        };
        [
            rel(&self.u, &prev.u),
            rel(&self.v, &prev.v),
            rel(&self.p, &prev.p),
            rel(&self.q, &prev.q),
        ]
    }
}

/// Adjoint time points of a scheme.
pub fn adjoint_times(scheme: Scheme, n_t: usize, t_final: f64) -> Vec<f64> {
    let tau = t_final / n_t as f64;
    match scheme {
        Scheme::StormerVerlet => std::iter::once(0.0)
            .chain((0..n_t).map(|k| (k as f64 + 0.5) * tau))
            .collect(),
        Scheme::BackwardEuler => (0..=n_t).map(|k| k as f64 * tau).collect(),
    }
}

/// Initial data, desired states and optional source terms of one problem
/// instance, all as nodal fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub u0: NodalField,
    pub v0: NodalField,
    /// Desired states at steps `0..=N_t`.
    pub target_u: Vec<NodalField>,
    pub target_v: Vec<NodalField>,
    /// Sources added to the state equations at steps `0..=N_t`.
    pub source_u: Option<Vec<NodalField>>,
    pub source_v: Option<Vec<NodalField>>,
}

impl ProblemData {
    pub fn n_t(&self) -> usize {
        self.target_u.len().saturating_sub(1)
    }

    pub fn validate(&self, n_t: usize, n_x: usize) -> Result<()> {
        check_len(n_x, self.u0.len(), "initial u")?;
        check_len(n_x, self.v0.len(), "initial v")?;
        let families = [
            Some(&self.target_u),
            Some(&self.target_v),
            self.source_u.as_ref(),
            self.source_v.as_ref(),
        ];
        for fam in families.into_iter().flatten() {
            check_len(n_t + 1, fam.len(), "time levels of problem data")?;
            for f in fam {
                check_len(n_x, f.len(), "problem data field")?;
            }
        }
        Ok(())
    }
}
