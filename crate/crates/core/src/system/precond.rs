use std::sync::Arc;

use rayon::prelude::*;

use super::Layout;
use crate::error::Result;
use crate::krylov::{BandedCholesky, BandedLu, ChebyshevMass, LinearOperator, MgConfig, MgHierarchy};
use crate::sparse::{CsrMatrix, CsrPattern};

/// Settings of the block preconditioner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecondConfig {
    /// Chebyshev steps per mass-matrix solve.
    pub chebyshev_iterations: usize,
    pub mg: MgConfig,
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self {
            chebyshev_iterations: 20,
            mg: MgConfig::default(),
        }
    }
}

/// One time step of the block-bidiagonal factor `B + D`.
///
/// The diagonal block couples adjoint rows `(u, v)` with adjoint unknowns
/// `(p, q)`: `[[g00, g01], [g10, g11]]`. Only `g00`, `g10` and `g11` enter
/// the block Gauss-Seidel approximation of its inverse. The super-diagonal
/// block couples to step `k + 1`.
pub(crate) struct StepBlocks {
    pub g00: CsrMatrix,
    pub g10: Vec<f64>,
    pub g11: CsrMatrix,
    pub upper: Option<UpperBlock>,
}

pub(crate) struct UpperBlock {
    pub u00: Vec<f64>,
    pub u01: Option<Vec<f64>>,
    pub u10: Option<Vec<f64>>,
    pub u11: Vec<f64>,
}

/// Approximate inverse of one diagonal block of `B + D`.
///
/// Blocks linearized far from a solution can be indefinite, where
/// fixed-cycle multigrid diverges; those are factored directly instead.
enum BlockInverse {
    Multigrid(MgHierarchy),
    Direct(BandedLu),
}

impl BlockInverse {
    fn build(a: &CsrMatrix, cfg: &MgConfig) -> Result<Self> {
        if BandedCholesky::from_csr(a).is_ok() {
            Ok(Self::Multigrid(MgHierarchy::build(a, *cfg)?))
        } else {
            Ok(Self::Direct(BandedLu::from_csr(a)?))
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Multigrid(mg) => mg.apply(x, y),
            Self::Direct(lu) => {
                y.copy_from_slice(x);
                lu.solve_in_place(y);
            }
        }
    }

    fn is_direct(&self) -> bool {
        matches!(self, Self::Direct(_))
    }
}

struct Step {
    q00: BlockInverse,
    q11: BlockInverse,
    g10: Vec<f64>,
    upper: Option<UpperBlock>,
}

/// Block-diagonal preconditioner `diag(A, S_hat)` for the all-at-once
/// system, with `S_hat = (B + D) A^{-1} (B + D)^T`.
///
/// `A` is inverted blockwise by Chebyshev semi-iteration on the mass matrix.
/// `S_hat^{-1}` is applied as a backward block substitution with `B + D`, a
/// multiplication with `A`, and the exactly transposed forward
/// substitution, which keeps the operator symmetric.
pub struct MatchedSchurPreconditioner {
    layout: Layout,
    pattern: Arc<CsrPattern>,
    mass: CsrMatrix,
    cheb: ChebyshevMass,
    a_scale: [f64; 2],
    steps: Vec<Step>,
    direct_blocks: usize,
}

impl MatchedSchurPreconditioner {
    pub(crate) fn build(
        layout: Layout,
        mass: &CsrMatrix,
        a_scale: [f64; 2],
        blocks: Vec<StepBlocks>,
        cfg: &PrecondConfig,
    ) -> Result<Self> {
        let cheb = ChebyshevMass::new(mass.clone(), cfg.chebyshev_iterations)?;
        let steps = blocks
            .into_par_iter()
            .map(|b| {
                Ok(Step {
                    q00: BlockInverse::build(&b.g00, &cfg.mg)?,
                    q11: BlockInverse::build(&b.g11, &cfg.mg)?,
                    g10: b.g10,
                    upper: b.upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let direct = steps
            .iter()
            .map(|s| s.q00.is_direct() as usize + s.q11.is_direct() as usize)
            .sum::<usize>();
        if direct > 0 {
            log::debug!("{direct} indefinite diagonal blocks factored directly");
        }
        Ok(Self {
            direct_blocks: direct,
            layout,
            pattern: mass.pattern().clone(),
            mass: mass.clone(),
            cheb,
            a_scale,
            steps,
        })
    }

    /// Number of diagonal blocks that were not positive definite.
    pub fn direct_blocks(&self) -> usize {
        self.direct_blocks
    }

    /// `y = S_hat^{-1} z` for `z` laid out as `[u-rows (K blocks), v-rows (K blocks)]`.
    pub fn apply_schur_inverse(&self, z: &[f64], y: &mut [f64]) {
        let nx = self.layout.n_x;
        let kb = self.layout.blocks;
        let pat = &*self.pattern;

        // Backward substitution (B + D) m = z.
        let mut m = vec![0.0; 2 * kb * nx];
        let mut ru = vec![0.0; nx];
        let mut rv = vec![0.0; nx];
        for k in (0..kb).rev() {
            ru.copy_from_slice(&z[k * nx..(k + 1) * nx]);
            rv.copy_from_slice(&z[(kb + k) * nx..(kb + k + 1) * nx]);
            if let Some(up) = &self.steps[k].upper {
                let (mp, mq) = m.split_at(kb * nx);
                let mp1 = &mp[(k + 1) * nx..(k + 2) * nx];
                let mq1 = &mq[(k + 1) * nx..(k + 2) * nx];
                pat.combo_matvec_add(&[(-1.0, &up.u00)], mp1, &mut ru);
                if let Some(u01) = &up.u01 {
                    pat.combo_matvec_add(&[(-1.0, u01)], mq1, &mut ru);
                }
                if let Some(u10) = &up.u10 {
                    pat.combo_matvec_add(&[(-1.0, u10)], mp1, &mut rv);
                }
                pat.combo_matvec_add(&[(-1.0, &up.u11)], mq1, &mut rv);
            }
            let step = &self.steps[k];
            let mut mp = vec![0.0; nx];
            step.q00.apply(&ru, &mut mp);
            pat.combo_matvec_add(&[(-1.0, &step.g10)], &mp, &mut rv);
            let mut mq = vec![0.0; nx];
            step.q11.apply(&rv, &mut mq);
            m[k * nx..(k + 1) * nx].copy_from_slice(&mp);
            m[(kb + k) * nx..(kb + k + 1) * nx].copy_from_slice(&mq);
        }

        // t = A m.
        let mut t = vec![0.0; 2 * kb * nx];
        t.par_chunks_mut(nx).zip(m.par_chunks(nx)).enumerate().for_each(|(i, (tb, mb))| {
            let s = if i < kb { self.a_scale[0] } else { self.a_scale[1] };
            self.mass.matvec(mb, tb);
            tb.iter_mut().for_each(|x| *x *= s);
        });

        // Forward substitution (B + D)^T y = t.
        let mut rp = vec![0.0; nx];
        let mut rq = vec![0.0; nx];
        for k in 0..kb {
            rp.copy_from_slice(&t[k * nx..(k + 1) * nx]);
            rq.copy_from_slice(&t[(kb + k) * nx..(kb + k + 1) * nx]);
            if k > 0 {
                if let Some(up) = &self.steps[k - 1].upper {
                    let (yu, yv) = y.split_at(kb * nx);
                    let yu0 = &yu[(k - 1) * nx..k * nx];
                    let yv0 = &yv[(k - 1) * nx..k * nx];
                    pat.combo_matvec_add(&[(-1.0, &up.u00)], yu0, &mut rp);
                    if let Some(u10) = &up.u10 {
                        pat.combo_matvec_add(&[(-1.0, u10)], yv0, &mut rp);
                    }
                    if let Some(u01) = &up.u01 {
                        pat.combo_matvec_add(&[(-1.0, u01)], yu0, &mut rq);
                    }
                    pat.combo_matvec_add(&[(-1.0, &up.u11)], yv0, &mut rq);
                }
            }
            let step = &self.steps[k];
            let mut yv = vec![0.0; nx];
            step.q11.apply(&rq, &mut yv);
            pat.combo_matvec_add(&[(-1.0, &step.g10)], &yv, &mut rp);
            let mut yu = vec![0.0; nx];
            step.q00.apply(&rp, &mut yu);
            y[k * nx..(k + 1) * nx].copy_from_slice(&yu);
            y[(kb + k) * nx..(kb + k + 1) * nx].copy_from_slice(&yv);
        }
    }

    /// `y = A^{-1} x` for the first half of the unknowns.
    pub fn apply_a_inverse(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.layout.n_x;
        let kb = self.layout.blocks;
        y.par_chunks_mut(nx).zip(x.par_chunks(nx)).enumerate().for_each(|(i, (yb, xb))| {
            let s = if i < kb { self.a_scale[0] } else { self.a_scale[1] };
            self.cheb.apply(xb, yb);
            yb.iter_mut().for_each(|v| *v /= s);
        });
    }
}

impl LinearOperator for MatchedSchurPreconditioner {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let half = self.layout.dim() / 2;
        let (y1, y2) = y.split_at_mut(half);
        self.apply_a_inverse(&x[..half], y1);
        self.apply_schur_inverse(&x[half..], y2);
    }
}
