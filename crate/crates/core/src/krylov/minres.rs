use serde::{Deserialize, Serialize};

use super::operator::LinearOperator;
use super::vecops::{axpy, dot};
use crate::error::{check_len, Error, Result};

const BREAKDOWN_TOL: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinresStatus {
    Converged,
    MaxIterations,
    /// Zero curvature in the Lanczos tridiagonal or an indefinite
    /// preconditioner was detected; the last iterate is returned.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned relative residual `||r||_P / ||b||_P`.
    pub relative_residual: f64,
    pub status: MinresStatus,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

/// Norm in which the stopping test measures the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResidualNorm {
    /// `||r||_P`, available for free from the recurrences.
    #[default]
    Preconditioned,
    /// `||r||_2`, tracked with one extra vector recurrence and no extra
    /// operator applications. Insensitive to a badly scaled preconditioner.
    Euclidean,
}

impl MinresOutcome {
    pub fn converged(&self) -> bool {
        self.status == MinresStatus::Converged
    }
}

/// Preconditioned MINRES for symmetric `a` with a symmetric positive
/// definite preconditioner `p` (an approximation of `a^{-1}`'s modulus).
///
/// Residuals are measured in the norm induced by `p`, relative to the
/// right-hand side: the iteration stops once `||b - A x||_P <= tol ||b||_P`.
pub fn minres(
    a: &dyn LinearOperator,
    p: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<MinresOutcome> {
    minres_with_norm(a, p, b, x0, tol, max_iter, ResidualNorm::Preconditioned)
}

/// [`minres`] with a selectable norm for the stopping test; the iterates
/// are identical, only the reported residuals and the stopping point differ.
pub fn minres_with_norm(
    a: &dyn LinearOperator,
    p: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    norm: ResidualNorm,
) -> Result<MinresOutcome> {
    let n = a.dim();
    check_len(n, b.len(), "minres right-hand side")?;
    check_len(n, p.dim(), "minres preconditioner")?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericDomain("non-finite right-hand side".into()));
    }

    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len(), "minres initial guess")?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };

    let mut r1 = b.to_vec();
    if x0.is_some() {
        let ax = a.apply_vec(&x);
        axpy(-1.0, &ax, &mut r1);
    }
    let euclid = norm == ResidualNorm::Euclidean;
    let mut r_true = if euclid { r1.clone() } else { Vec::new() };
    let b2 = dot(b, b).sqrt();
    let mut y = p.apply_vec(&r1);
    let beta1_sq = dot(&r1, &y);
    let bnorm = if x0.is_some() {
        let pb = p.apply_vec(b);
        dot(b, &pb).max(0.0).sqrt()
    } else {
        beta1_sq.max(0.0).sqrt()
    };
    let done = |status, iterations, relres, history, x| {
        Ok(MinresOutcome {
            x,
            iterations,
            relative_residual: relres,
            status,
            history,
        })
    };
    if beta1_sq < 0.0 {
        return done(MinresStatus::Breakdown, 0, f64::NAN, Vec::new(), x);
    }
    if bnorm == 0.0 {
        return done(MinresStatus::Converged, 0, 0.0, Vec::new(), vec![0.0; n]);
    }
    let beta1 = beta1_sq.sqrt();
    let initial = if euclid { dot(&r_true, &r_true).sqrt() / b2 } else { beta1 / bnorm };
    if initial <= tol {
        return done(MinresStatus::Converged, 0, initial, Vec::new(), x);
    }

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut history = Vec::new();
    let work = if euclid { n } else { 0 };
    let mut av = vec![0.0; work];
    let mut aw = vec![0.0; work];
    let mut aw1 = vec![0.0; work];
    let mut aw2 = vec![0.0; work];
    let mut relres = initial;

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if euclid {
            av.copy_from_slice(&y);
        }
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        p.apply(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return done(MinresStatus::Breakdown, itn - 1, relres, history, x);
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        let gamma = gbar.hypot(beta);
        if gamma < BREAKDOWN_TOL {
            return done(MinresStatus::Breakdown, itn - 1, relres, history, x);
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if euclid {
            std::mem::swap(&mut aw1, &mut aw2);
            std::mem::swap(&mut aw2, &mut aw);
            for i in 0..n {
                aw[i] = (av[i] - oldeps * aw1[i] - delta * aw2[i]) * denom;
                r_true[i] -= phi * aw[i];
            }
            relres = dot(&r_true, &r_true).sqrt() / b2;
        } else {
            relres = phibar / bnorm;
        }
        history.push(relres);
        if relres <= tol {
            return done(MinresStatus::Converged, itn, relres, history, x);
        }
        if beta < BREAKDOWN_TOL {
            return done(MinresStatus::Breakdown, itn, relres, history, x);
        }
    }
    done(MinresStatus::MaxIterations, max_iter, relres, history, x)
}
