//! Smoothed-aggregation algebraic multigrid used as a fixed-cycle solver.

use serde::{Deserialize, Serialize};

use super::direct::{BandedLu, DenseCholesky};
use super::operator::LinearOperator;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Smoother {
    /// Damped Jacobi with the given weight.
    Jacobi { omega: f64 },
    /// Forward Gauss-Seidel sweeps before, backward sweeps after the coarse
    /// correction.
    GaussSeidel,
    /// Each sweep is a forward followed by a backward Gauss-Seidel pass.
    SymmetricGaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgConfig {
    /// Symmetric strength threshold `|a_ij| >= theta sqrt(|a_ii a_jj|)`.
    pub strength_theta: f64,
    /// Levels with at most this many unknowns are solved directly.
    pub max_coarse: usize,
    pub max_levels: usize,
    pub smoother: Smoother,
    /// Smoothing sweeps before and after the coarse correction.
    pub sweeps: usize,
    /// V-cycles per application.
    pub cycles: usize,
    /// Prolongator smoothing weight, scaled by `1 / rho(D^{-1} A)`.
    pub prolongator_omega: f64,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            strength_theta: 0.08,
            max_coarse: 199,
            max_levels: 12,
            smoother: Smoother::SymmetricGaussSeidel,
            sweeps: 2,
            cycles: 6,
            prolongator_omega: 4.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    p: CsrMatrix,
    r: CsrMatrix,
    inv_diag: Vec<f64>,
}

/// Direct solver on the coarsest level. Symmetric indefinite coarse
/// matrices fall back to LU, whose inverse is still symmetric.
#[derive(Debug, Clone)]
enum CoarseSolver {
    Cholesky(DenseCholesky),
    Lu(BandedLu),
}

impl CoarseSolver {
    fn new(a: &CsrMatrix) -> Result<Self> {
        match DenseCholesky::from_csr(a) {
            Ok(c) => Ok(Self::Cholesky(c)),
            Err(_) => BandedLu::from_csr(a)
                .map(Self::Lu)
                .map_err(|e| Error::Singular(format!("coarsest multigrid level: {e}"))),
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            Self::Cholesky(c) => c.solve_in_place(b),
            Self::Lu(l) => l.solve_in_place(b),
        }
    }
}

/// Multigrid hierarchy; applying it runs a fixed number of symmetric
/// V-cycles from a zero initial guess, so it is a fixed symmetric linear
/// operator.
///
/// The matrix must be symmetric with a nonzero diagonal. Positive
/// definiteness is not required, which matters for blocks linearized far
/// from a solution; convergence of the cycles is then not guaranteed.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    levels: Vec<Level>,
    coarse_a: CsrMatrix,
    coarse: CoarseSolver,
    config: MgConfig,
}

impl MgHierarchy {
    pub fn build(a: &CsrMatrix, config: MgConfig) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidArgument("multigrid needs a square matrix".into()));
        }
        if config.cycles == 0 {
            return Err(Error::InvalidArgument("multigrid needs at least one cycle".into()));
        }
        let mut levels = Vec::new();
        let mut current = a.clone();
        while current.nrows() > config.max_coarse && levels.len() + 1 < config.max_levels {
            let diag = current.diagonal();
            if let Some(d) = diag.iter().find(|d| !(d.is_finite() && **d != 0.0)) {
                return Err(Error::InvalidArgument(format!("invalid diagonal entry {d}")));
            }
            let (agg, n_agg) = aggregate(&current, config.strength_theta);
            if n_agg == 0 || n_agg == current.nrows() {
                break;
            }
            let t = tentative_prolongator(&agg, n_agg);
            let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
            let inv_abs: Vec<f64> = inv_diag.iter().map(|d| d.abs()).collect();
            let p = smooth_prolongator(&current, &inv_abs, &t, config.prolongator_omega)?;
            let r = p.transpose();
            let coarse = r.matmul(&current)?.matmul(&p)?;
            levels.push(Level {
                a: current,
                p,
                r,
                inv_diag,
            });
            current = coarse;
        }
        let coarse = CoarseSolver::new(&current)?;
        Ok(Self {
            levels,
            coarse_a: current,
            coarse,
            config,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.levels.iter().map(|l| l.a.nrows()).collect();
        s.push(self.coarse_a.nrows());
        s
    }

    pub fn config(&self) -> &MgConfig {
        &self.config
    }

    fn smooth(&self, level: &Level, b: &[f64], x: &mut [f64], forward: bool) {
        let a = &level.a;
        match self.config.smoother {
            Smoother::Jacobi { omega } => {
                let mut ax = vec![0.0; x.len()];
                for _ in 0..self.config.sweeps {
                    a.matvec(x, &mut ax);
                    for i in 0..x.len() {
                        x[i] += omega * level.inv_diag[i] * (b[i] - ax[i]);
                    }
                }
            }
            Smoother::GaussSeidel | Smoother::SymmetricGaussSeidel => {
                let p = a.pattern();
                let (rp, ci, vals) = (p.row_ptr(), p.col_idx(), a.values());
                let n = x.len();
                let mut sweep = |i: usize| {
                    let mut s = b[i];
                    for nz in rp[i]..rp[i + 1] {
                        let j = ci[nz];
                        if j != i {
                            s -= vals[nz] * x[j];
                        }
                    }
                    x[i] = s * level.inv_diag[i];
                };
                let both = self.config.smoother == Smoother::SymmetricGaussSeidel;
                for _ in 0..self.config.sweeps {
                    if both {
                        (0..n).for_each(&mut sweep);
                        (0..n).rev().for_each(&mut sweep);
                    } else if forward {
                        (0..n).for_each(&mut sweep);
                    } else {
                        (0..n).rev().for_each(&mut sweep);
                    }
                }
            }
        }
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == self.levels.len() {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        }
        let level = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        self.smooth(level, b, x, true);
        let mut r = b.to_vec();
        level.a.matvec_add(-1.0, x, &mut r);
        let rc = level.r.mul_vec(&r);
        let mut xc = vec![0.0; rc.len()];
        self.vcycle(l + 1, &rc, &mut xc);
        level.p.matvec_add(1.0, &xc, x);
        self.smooth(level, b, x, false);
    }
}

impl LinearOperator for MgHierarchy {
    fn dim(&self) -> usize {
        self.levels.first().map_or(self.coarse_a.nrows(), |l| l.a.nrows())
    }

    fn apply(&self, b: &[f64], x: &mut [f64]) {
        if self.levels.is_empty() {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        }
        let a = &self.levels[0].a;
        let n = b.len();
        let mut e = vec![0.0; n];
        self.vcycle(0, b, x);
        let mut r = vec![0.0; n];
        for _ in 1..self.config.cycles {
            r.copy_from_slice(b);
            a.matvec_add(-1.0, x, &mut r);
            self.vcycle(0, &r, &mut e);
            for i in 0..n {
                x[i] += e[i];
            }
        }
    }
}

/// Standard three-pass aggregation on the symmetric strength graph.
fn aggregate(a: &CsrMatrix, theta: f64) -> (Vec<usize>, usize) {
    let n = a.nrows();
    let p = a.pattern();
    let diag = a.diagonal();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (p.row_ptr()[i]..p.row_ptr()[i + 1])
                .filter_map(|nz| {
                    let j = p.col_idx()[nz];
                    let v = a.values()[nz];
                    (j != i && v.abs() >= theta * (diag[i] * diag[j]).abs().sqrt()).then_some(j)
                })
                .collect()
        })
        .collect();

    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] == NONE && strong[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let pass1 = agg.clone();
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(&j) = strong[i].iter().find(|&&j| pass1[j] != NONE) {
                agg[i] = pass1[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            agg[i] = count;
            for &j in &strong[i] {
                if agg[j] == NONE {
                    agg[j] = count;
                }
            }
            count += 1;
        }
    }
    (agg, count)
}

fn tentative_prolongator(agg: &[usize], n_agg: usize) -> CsrMatrix {
    let mut size = vec![0usize; n_agg];
    for &g in agg {
        size[g] += 1;
    }
    let trip: Vec<_> = agg
        .iter()
        .enumerate()
        .map(|(i, &g)| (i, g, 1.0 / (size[g] as f64).sqrt()))
        .collect();
    CsrMatrix::from_triplets(agg.len(), n_agg, &trip)
}

/// `P = (I - omega / rho D^{-1} A) T`.
fn smooth_prolongator(a: &CsrMatrix, inv_diag: &[f64], t: &CsrMatrix, omega: f64) -> Result<CsrMatrix> {
    let rho = spectral_radius_dinv_a(a, inv_diag);
    let w = omega / rho;
    let mut dinv_a = a.clone();
    {
        let p = dinv_a.pattern().clone();
        let vals = dinv_a.values_mut();
        for i in 0..p.nrows() {
            for nz in p.row_ptr()[i]..p.row_ptr()[i + 1] {
                vals[nz] *= -w * inv_diag[i];
            }
            let d = p.find(i, i).expect("diagonal entry");
            vals[d] += 1.0;
        }
    }
    dinv_a.matmul(t)
}

/// Power-iteration estimate of the spectral radius of `|D|^{-1} A`, computed
/// through the similar symmetric matrix `|D|^{-1/2} A |D|^{-1/2}`.
fn spectral_radius_dinv_a(a: &CsrMatrix, inv_diag: &[f64]) -> f64 {
    let n = a.nrows();
    let s: Vec<f64> = inv_diag.iter().map(|d| d.sqrt()).collect();
    // Deterministic start vector with components in every frequency range.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut y = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut lambda = 1.0;
    for _ in 0..30 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        for i in 0..n {
            tmp[i] = s[i] * x[i];
        }
        a.matvec(&tmp, &mut y);
        for i in 0..n {
            y[i] *= s[i];
        }
        lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs();
        std::mem::swap(&mut x, &mut y);
    }
    // The Rayleigh quotient underestimates; pad slightly.
    (lambda * 1.05).max(f64::MIN_POSITIVE)
}
