use rayon::prelude::*;

use super::precond::{MatchedSchurPreconditioner, PrecondConfig, StepBlocks, UpperBlock};
use super::{negated, AllAtOnceSystem, Layout};
use crate::error::{check_len, Result};
use crate::fem::{FemSpace, NodalField};
use crate::krylov::{ChebyshevMass, LinearOperator};
use crate::model::SchnakenbergParams;
use crate::sparse::CsrMatrix;
use crate::trajectory::{ProblemData, Scheme, Trajectory};

/// Linearization-dependent matrices and vectors of one integer time step.
struct StepData {
    muv: Vec<f64>,
    mu2: Vec<f64>,
    /// `gamma M_{v s}` with `s` the sum of the neighbouring `(q - p)` values.
    a1: Vec<f64>,
    /// `gamma M_{u s}`.
    a12: Vec<f64>,
    /// `2 gamma int u^2 v phi`.
    d: Vec<f64>,
    /// `4 gamma int u v s phi`.
    c_nl: Vec<f64>,
    /// `2 gamma int u^2 s phi`.
    h_nl: Vec<f64>,
}

/// Störmer-Verlet all-at-once system linearized at a given trajectory.
///
/// Adjoint unknowns are `p^{k+1/2}` for `k = 0..N_t-1` and state unknowns
/// `u^1..u^{N_t}`; `u^0` is known and `p^0` is recovered afterwards.
pub struct SvSystem<'a> {
    space: &'a FemSpace,
    params: SchnakenbergParams,
    layout: Layout,
    u0: NodalField,
    v0: NodalField,
    steps: Vec<StepData>,
    rhs: Vec<f64>,
    c0: Vec<f64>,
    h0: Vec<f64>,
    cheb: ChebyshevMass,
}

fn combine(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = vec![0.0; terms[0].1.len()];
    for &(c, v) in terms {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

impl<'a> SvSystem<'a> {
    pub fn assemble(
        space: &'a FemSpace,
        params: &SchnakenbergParams,
        lin: &Trajectory,
        data: &ProblemData,
    ) -> Result<Self> {
        params.validate()?;
        let n_t = params.n_t;
        let n_x = space.num_nodes();
        lin.validate(n_x)?;
        check_len(n_t, lin.n_t(), "linearization time steps")?;
        data.validate(n_t, n_x)?;
        let g = params.gamma;

        let steps = (0..=n_t)
            .into_par_iter()
            .map(|i| {
                let u = &lin.u[i];
                let v = &lin.v[i];
                let mut s = vec![0.0; n_x];
                if i >= 1 {
                    for (sr, (q, p)) in s.iter_mut().zip(lin.q[i].iter().zip(&lin.p[i])) {
                        *sr += q - p;
                    }
                }
                if i < n_t {
                    for (sr, (q, p)) in s.iter_mut().zip(lin.q[i + 1].iter().zip(&lin.p[i + 1])) {
                        *sr += q - p;
                    }
                }
                let scaled = |mut x: Vec<f64>, c: f64| {
                    x.iter_mut().for_each(|e| *e *= c);
                    x
                };
                Ok(StepData {
                    muv: space.product_mass_values(&[u, v])?,
                    mu2: space.product_mass_values(&[u, u])?,
                    a1: scaled(space.product_mass_values(&[v, &s])?, g),
                    a12: scaled(space.product_mass_values(&[u, &s])?, g),
                    d: scaled(space.product_load(&[u, u, v])?, 2.0 * g),
                    c_nl: scaled(space.product_load(&[u, v, &s])?, 4.0 * g),
                    h_nl: scaled(space.product_load(&[u, u, &s])?, 2.0 * g),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let layout = Layout { n_x, blocks: n_t };
        let c0 = combine(&[(params.alpha1, &space.load(&data.target_u[0])), (1.0, &steps[0].c_nl)]);
        let h0 = combine(&[(params.alpha2, &space.load(&data.target_v[0])), (1.0, &steps[0].h_nl)]);
        let cheb = ChebyshevMass::new(space.mass.clone(), 20)?;
        let mut sys = Self {
            space,
            params: *params,
            layout,
            u0: data.u0.clone(),
            v0: data.v0.clone(),
            steps,
            rhs: Vec::new(),
            c0,
            h0,
            cheb,
        };
        sys.rhs = sys.build_rhs(data);
        Ok(sys)
    }

    fn mass(&self) -> &CsrMatrix {
        &self.space.mass
    }

    fn tau(&self) -> f64 {
        self.params.tau()
    }

    /// Terms of `(+/-M + tau L1^i)`.
    fn l1_terms(&self, i: usize, sign: f64) -> [(f64, &[f64]); 3] {
        let (t, g) = (self.tau(), self.params.gamma);
        [
            (sign + 0.5 * t * g, self.space.mass.values()),
            (0.5 * t * self.params.d_u, self.space.stiffness.values()),
            (-t * g, &self.steps[i].muv),
        ]
    }

    /// Terms of `(+/-M + tau L2^i)`.
    fn l2_terms(&self, i: usize, sign: f64) -> [(f64, &[f64]); 3] {
        let (t, g) = (self.tau(), self.params.gamma);
        [
            (sign, self.space.mass.values()),
            (0.5 * t * self.params.d_v, self.space.stiffness.values()),
            (0.5 * t * g, &self.steps[i].mu2),
        ]
    }

    fn build_rhs(&self, data: &ProblemData) -> Vec<f64> {
        let lay = self.layout;
        let n_t = lay.blocks;
        let (t, g) = (self.tau(), self.params.gamma);
        let (a1, a2) = (self.params.alpha1, self.params.alpha2);
        let pat = self.mass().pattern();
        let mut rhs = vec![0.0; lay.dim()];
        let blocks: Vec<(usize, Vec<f64>)> = (0..4 * n_t)
            .into_par_iter()
            .map(|b| {
                let (fam, k) = (b / n_t, b % n_t);
                let mut y = vec![0.0; lay.n_x];
                match fam {
                    0 | 1 => {
                        let sign = if fam == 0 { -1.0 } else { 1.0 };
                        for (yi, (d0, d1)) in y.iter_mut().zip(self.steps[k].d.iter().zip(&self.steps[k + 1].d)) {
                            *yi = sign * 0.5 * t * (d0 + d1);
                        }
                        let src = if fam == 0 { &data.source_u } else { &data.source_v };
                        if let Some(src) = src {
                            let s: Vec<f64> = src[k].iter().zip(&src[k + 1]).map(|(a, b)| a + b).collect();
                            self.mass().matvec_add(0.5 * t, &s, &mut y);
                        }
                        if k == 0 {
                            if fam == 0 {
                                pat.combo_matvec_add(&negated_terms(&self.l1_terms(0, -1.0)), &self.u0, &mut y);
                                pat.combo_matvec_add(&[(0.5 * t * g, &self.steps[0].mu2)], &self.v0, &mut y);
                            } else {
                                pat.combo_matvec_add(&[(-t * g, &self.steps[0].muv)], &self.u0, &mut y);
                                pat.combo_matvec_add(&negated_terms(&self.l2_terms(0, -1.0)), &self.v0, &mut y);
                            }
                        }
                    }
                    _ => {
                        let i = k + 1;
                        let mult = if i < n_t { 2.0 } else { 1.0 };
                        let (alpha, target, nl) = if fam == 2 {
                            (a1, &data.target_u[i], &self.steps[i].c_nl)
                        } else {
                            (a2, &data.target_v[i], &self.steps[i].h_nl)
                        };
                        self.mass().matvec(target, &mut y);
                        for (yi, n) in y.iter_mut().zip(nl) {
                            *yi = -0.5 * t * (mult * alpha * *yi + n);
                        }
                    }
                }
                (b, y)
            })
            .collect();
        for (b, y) in blocks {
            rhs[b * lay.n_x..(b + 1) * lay.n_x].copy_from_slice(&y);
        }
        rhs
    }

    /// Recovers `(p^0, q^0)` from the first half-step adjoint equations.
    pub fn recover_initial_adjoints(&self, p_half: &[f64], q_half: &[f64]) -> (NodalField, NodalField) {
        let (t, g) = (self.tau(), self.params.gamma);
        let (a1, a2) = (self.params.alpha1, self.params.alpha2);
        let pat = self.mass().pattern();
        let s0 = &self.steps[0];
        let m = self.mass().values();

        let mut rp: Vec<f64> = self.c0.iter().map(|c| 0.5 * t * c).collect();
        pat.combo_matvec_add(&[(-0.5 * t * a1, m), (-t, &s0.a1)], &self.u0, &mut rp);
        pat.combo_matvec_add(&[(-t, &s0.a12)], &self.v0, &mut rp);
        pat.combo_matvec_add(&negated_terms(&self.l1_terms(0, -1.0)), p_half, &mut rp);
        pat.combo_matvec_add(&[(-t * g, &s0.muv)], q_half, &mut rp);

        let mut rq: Vec<f64> = self.h0.iter().map(|c| 0.5 * t * c).collect();
        pat.combo_matvec_add(&[(-t, &s0.a12)], &self.u0, &mut rq);
        pat.combo_matvec_add(&[(-0.5 * t * a2, m)], &self.v0, &mut rq);
        pat.combo_matvec_add(&[(0.5 * t * g, &s0.mu2)], p_half, &mut rq);
        pat.combo_matvec_add(&negated_terms(&self.l2_terms(0, -1.0)), q_half, &mut rq);

        (self.cheb.solve(&rp), self.cheb.solve(&rq))
    }

    /// Matching blocks `D` per time block: `tau gamma sqrt(alpha / beta)`,
    /// with `alpha / (2 beta)` in the last block.
    pub fn matching_coefficients(&self) -> Vec<[f64; 2]> {
        let p = &self.params;
        let tg = self.tau() * p.gamma;
        (0..self.layout.blocks)
            .map(|k| {
                let f = if k + 1 == self.layout.blocks { 0.5 } else { 1.0 };
                [tg * (f * p.alpha1 / p.beta1).sqrt(), tg * (f * p.alpha2 / p.beta2).sqrt()]
            })
            .collect()
    }
}

fn negated_terms<'t>(terms: &[(f64, &'t [f64]); 3]) -> [(f64, &'t [f64]); 3] {
    terms.map(|(c, v)| (-c, v))
}

impl LinearOperator for SvSystem<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn apply(&self, w: &[f64], y: &mut [f64]) {
        let lay = self.layout;
        let kb = lay.blocks;
        let nx = lay.n_x;
        let p = &self.params;
        let (t, g) = (self.tau(), p.gamma);
        let pat = self.mass().pattern();
        let m = self.mass().values();
        let sa = [t * g * g / p.beta1, t * g * g / p.beta2];
        let blk = |fam: usize, k: usize| &w[lay.range(fam, k)];

        y.par_chunks_mut(nx).enumerate().for_each(|(b, yb)| {
            let (fam, k) = (b / kb, b % kb);
            yb.iter_mut().for_each(|x| *x = 0.0);
            match fam {
                0 => {
                    let i = k + 1;
                    pat.combo_matvec_add(&[(sa[0], m)], blk(0, k), yb);
                    pat.combo_matvec_add(&self.l1_terms(i, 1.0), blk(2, k), yb);
                    pat.combo_matvec_add(&[(-0.5 * t * g, &self.steps[i].mu2)], blk(3, k), yb);
                    if k >= 1 {
                        pat.combo_matvec_add(&self.l1_terms(k, -1.0), blk(2, k - 1), yb);
                        pat.combo_matvec_add(&[(-0.5 * t * g, &self.steps[k].mu2)], blk(3, k - 1), yb);
                    }
                }
                1 => {
                    let i = k + 1;
                    pat.combo_matvec_add(&[(sa[1], m)], blk(1, k), yb);
                    pat.combo_matvec_add(&[(t * g, &self.steps[i].muv)], blk(2, k), yb);
                    pat.combo_matvec_add(&self.l2_terms(i, 1.0), blk(3, k), yb);
                    if k >= 1 {
                        pat.combo_matvec_add(&[(t * g, &self.steps[k].muv)], blk(2, k - 1), yb);
                        pat.combo_matvec_add(&self.l2_terms(k, -1.0), blk(3, k - 1), yb);
                    }
                }
                2 => {
                    let i = k + 1;
                    let half = if k + 1 == kb { 0.5 } else { 1.0 };
                    let st = &self.steps[i];
                    pat.combo_matvec_add(&self.l1_terms(i, 1.0), blk(0, k), yb);
                    pat.combo_matvec_add(&[(t * g, &st.muv)], blk(1, k), yb);
                    if k + 1 < kb {
                        pat.combo_matvec_add(&self.l1_terms(i, -1.0), blk(0, k + 1), yb);
                        pat.combo_matvec_add(&[(t * g, &st.muv)], blk(1, k + 1), yb);
                    }
                    pat.combo_matvec_add(&[(-t * p.alpha1 * half, m), (-t, &st.a1)], blk(2, k), yb);
                    pat.combo_matvec_add(&[(-t, &st.a12)], blk(3, k), yb);
                }
                _ => {
                    let i = k + 1;
                    let half = if k + 1 == kb { 0.5 } else { 1.0 };
                    let st = &self.steps[i];
                    pat.combo_matvec_add(&[(-0.5 * t * g, &st.mu2)], blk(0, k), yb);
                    pat.combo_matvec_add(&self.l2_terms(i, 1.0), blk(1, k), yb);
                    if k + 1 < kb {
                        pat.combo_matvec_add(&[(-0.5 * t * g, &st.mu2)], blk(0, k + 1), yb);
                        pat.combo_matvec_add(&self.l2_terms(i, -1.0), blk(1, k + 1), yb);
                    }
                    pat.combo_matvec_add(&[(-t, &st.a12)], blk(2, k), yb);
                    pat.combo_matvec_add(&[(-t * p.alpha2 * half, m)], blk(3, k), yb);
                }
            }
        });
    }
}

impl AllAtOnceSystem for SvSystem<'_> {
    fn layout(&self) -> Layout {
        self.layout
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn pack(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        traj.validate(self.layout.n_x)?;
        check_len(self.layout.blocks, traj.n_t(), "trajectory time steps")?;
        let lay = self.layout;
        let mut w = vec![0.0; lay.dim()];
        for k in 0..lay.blocks {
            for (x, s) in w[lay.range(0, k)].iter_mut().zip(&traj.p[k + 1]) {
                *x = -s;
            }
            for (x, s) in w[lay.range(1, k)].iter_mut().zip(&traj.q[k + 1]) {
                *x = -s;
            }
            w[lay.range(2, k)].copy_from_slice(&traj.u[k + 1]);
            w[lay.range(3, k)].copy_from_slice(&traj.v[k + 1]);
        }
        Ok(w)
    }

    fn unpack(&self, w: &[f64]) -> Result<Trajectory> {
        let lay = self.layout;
        check_len(lay.dim(), w.len(), "solution vector")?;
        let p = &self.params;
        let mut traj = Trajectory::zeros(Scheme::StormerVerlet, lay.blocks, p.t_final, lay.n_x);
        traj.u[0] = self.u0.clone();
        traj.v[0] = self.v0.clone();
        for k in 0..lay.blocks {
            traj.p[k + 1] = negated(&w[lay.range(0, k)]);
            traj.q[k + 1] = negated(&w[lay.range(1, k)]);
            traj.u[k + 1] = w[lay.range(2, k)].to_vec();
            traj.v[k + 1] = w[lay.range(3, k)].to_vec();
        }
        let (p0, q0) = self.recover_initial_adjoints(&traj.p[1], &traj.q[1]);
        traj.p[0] = p0;
        traj.q[0] = q0;
        traj.recover_controls(p.gamma, p.beta1, p.beta2);
        Ok(traj)
    }

    fn preconditioner(&self, cfg: &PrecondConfig) -> Result<MatchedSchurPreconditioner> {
        let kb = self.layout.blocks;
        let (t, g) = (self.tau(), self.params.gamma);
        let m = self.mass().values();
        let dcoef = self.matching_coefficients();
        let pattern = self.mass().pattern().clone();
        let blocks = (0..kb)
            .map(|k| {
                let i = k + 1;
                let st = &self.steps[i];
                let mut l1 = self.l1_terms(i, 1.0).to_vec();
                l1.push((dcoef[k][0], m));
                let mut l2 = self.l2_terms(i, 1.0).to_vec();
                l2.push((dcoef[k][1], m));
                let upper = (k + 1 < kb).then(|| UpperBlock {
                    u00: combine(&self.l1_terms(i, -1.0)),
                    u01: Some(combine(&[(t * g, &st.muv)])),
                    u10: Some(combine(&[(-0.5 * t * g, &st.mu2)])),
                    u11: combine(&self.l2_terms(i, -1.0)),
                });
                Ok(StepBlocks {
                    g00: CsrMatrix::new(pattern.clone(), combine(&l1))?,
                    g10: combine(&[(-0.5 * t * g, &st.mu2)]),
                    g11: CsrMatrix::new(pattern.clone(), combine(&l2))?,
                    upper,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let p = &self.params;
        MatchedSchurPreconditioner::build(
            self.layout,
            self.mass(),
            [t * g * g / p.beta1, t * g * g / p.beta2],
            blocks,
            cfg,
        )
    }
}

