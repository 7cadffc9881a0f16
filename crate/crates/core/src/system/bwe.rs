use rayon::prelude::*;

use super::precond::{MatchedSchurPreconditioner, PrecondConfig, StepBlocks, UpperBlock};
use super::{negated, sub, AllAtOnceSystem, Layout};
use crate::error::{check_len, Error, Result};
use crate::fem::{FemSpace, NodalField};
use crate::krylov::BandedLu;
use crate::model::SchnakenbergParams;
use crate::sparse::{CsrMatrix, CsrPattern};
use crate::trajectory::{ProblemData, Scheme, Trajectory};

struct StepData {
    muv: Vec<f64>,
    mu2: Vec<f64>,
    /// `2 gamma M_{v (q - p)}`.
    a1: Vec<f64>,
    /// `2 gamma M_{u (q - p)}`.
    a12: Vec<f64>,
    /// `2 gamma int u^2 v phi`.
    d: Vec<f64>,
    /// `4 gamma int u v (q - p) phi`.
    c_nl: Vec<f64>,
    /// `2 gamma int u^2 (q - p) phi`.
    h_nl: Vec<f64>,
}

/// Backward-Euler all-at-once system linearized at a given trajectory.
///
/// The unknowns are states and adjoints at the interior steps
/// `1..N_t-1`. The initial adjoints and the final states follow from small
/// coupled systems once the interior is known; the final adjoint is zero.
pub struct BweSystem<'a> {
    space: &'a FemSpace,
    params: SchnakenbergParams,
    layout: Layout,
    u0: NodalField,
    v0: NodalField,
    steps: Vec<StepData>,
    rhs: Vec<f64>,
    c0: Vec<f64>,
    h0: Vec<f64>,
    final_rhs: [Vec<f64>; 2],
    initial_solver: BandedLu,
    final_solver: BandedLu,
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

/// 2x2 block matrix over a shared pattern with interleaved unknowns
/// `(x_0, y_0, x_1, y_1, ...)`, which keeps the bandwidth small.
fn interleaved(pattern: &CsrPattern, blocks: [[&[f64]; 2]; 2]) -> CsrMatrix {
    let mut trip = Vec::with_capacity(4 * pattern.nnz());
    for i in 0..pattern.nrows() {
        for nz in pattern.row_ptr()[i]..pattern.row_ptr()[i + 1] {
            let j = pattern.col_idx()[nz];
            for (r, row) in blocks.iter().enumerate() {
                for (c, vals) in row.iter().enumerate() {
                    trip.push((2 * i + r, 2 * j + c, vals[nz]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(2 * pattern.nrows(), 2 * pattern.nrows(), &trip)
}

fn solve_interleaved(lu: &BandedLu, r0: &[f64], r1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut b: Vec<f64> = r0.iter().zip(r1).flat_map(|(a, b)| [*a, *b]).collect();
    lu.solve_in_place(&mut b);
    (b.iter().step_by(2).copied().collect(), b.iter().skip(1).step_by(2).copied().collect())
}

impl<'a> BweSystem<'a> {
    pub fn assemble(
        space: &'a FemSpace,
        params: &SchnakenbergParams,
        lin: &Trajectory,
        data: &ProblemData,
    ) -> Result<Self> {
        params.validate()?;
        let n_t = params.n_t;
        if n_t < 2 {
            return Err(Error::InvalidArgument("backward Euler needs at least two time steps".into()));
        }
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
                let s = sub(&lin.q[i], &lin.p[i]);
                let scaled = |mut x: Vec<f64>, c: f64| {
                    x.iter_mut().for_each(|e| *e *= c);
                    x
                };
                Ok(StepData {
                    muv: space.product_mass_values(&[u, v])?,
                    mu2: space.product_mass_values(&[u, u])?,
                    a1: scaled(space.product_mass_values(&[v, &s])?, 2.0 * g),
                    a12: scaled(space.product_mass_values(&[u, &s])?, 2.0 * g),
                    d: scaled(space.product_load(&[u, u, v])?, 2.0 * g),
                    c_nl: scaled(space.product_load(&[u, v, &s])?, 4.0 * g),
                    h_nl: scaled(space.product_load(&[u, u, &s])?, 2.0 * g),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let tau = params.tau();
        let c0 = combine(&[(params.alpha1, &space.load(&data.target_u[0])), (1.0, &steps[0].c_nl)]);
        let h0 = combine(&[(params.alpha2, &space.load(&data.target_v[0])), (1.0, &steps[0].h_nl)]);
        let last = &steps[n_t];
        let mut fu: Vec<f64> = last.d.iter().map(|d| -tau * d).collect();
        let mut fv: Vec<f64> = last.d.iter().map(|d| tau * d).collect();
        if let Some(src) = &data.source_u {
            space.mass.matvec_add(tau, &src[n_t], &mut fu);
        }
        if let Some(src) = &data.source_v {
            space.mass.matvec_add(tau, &src[n_t], &mut fv);
        }

        let layout = Layout { n_x, blocks: n_t - 1 };
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
            final_rhs: [fu, fv],
            initial_solver: BandedLu::from_csr(&CsrMatrix::identity(1))?,
            final_solver: BandedLu::from_csr(&CsrMatrix::identity(1))?,
        };
        let pat = space.mass.pattern();
        let (l1, l2) = (sys.l1(0), sys.l2(0));
        let cuv = combine(&[(2.0 * tau * g, &sys.steps[0].muv)]);
        let cu2 = combine(&[(-tau * g, &sys.steps[0].mu2)]);
        sys.initial_solver = BandedLu::from_csr(&interleaved(pat, [[&l1, &cuv], [&cu2, &l2]]))?;
        let (l1, l2) = (sys.l1(n_t), sys.l2(n_t));
        let cuv = combine(&[(2.0 * tau * g, &sys.steps[n_t].muv)]);
        let cu2 = combine(&[(-tau * g, &sys.steps[n_t].mu2)]);
        sys.final_solver = BandedLu::from_csr(&interleaved(pat, [[&l1, &cu2], [&cuv, &l2]]))?;
        sys.rhs = sys.build_rhs(data);
        Ok(sys)
    }

    fn tau(&self) -> f64 {
        self.params.tau()
    }

    fn mass(&self) -> &CsrMatrix {
        &self.space.mass
    }

    /// Terms of `M + 2 tau L1^i`.
    fn l1_terms(&self, i: usize) -> [(f64, &[f64]); 3] {
        let (t, g) = (self.tau(), self.params.gamma);
        [
            (1.0 + t * g, self.space.mass.values()),
            (t * self.params.d_u, self.space.stiffness.values()),
            (-2.0 * t * g, &self.steps[i].muv),
        ]
    }

    /// Terms of `M + 2 tau L2^i`.
    fn l2_terms(&self, i: usize) -> [(f64, &[f64]); 3] {
        let (t, g) = (self.tau(), self.params.gamma);
        [
            (1.0, self.space.mass.values()),
            (t * self.params.d_v, self.space.stiffness.values()),
            (t * g, &self.steps[i].mu2),
        ]
    }

    fn l1(&self, i: usize) -> Vec<f64> {
        combine(&self.l1_terms(i))
    }

    fn l2(&self, i: usize) -> Vec<f64> {
        combine(&self.l2_terms(i))
    }

    fn build_rhs(&self, data: &ProblemData) -> Vec<f64> {
        let lay = self.layout;
        let kb = lay.blocks;
        let t = self.tau();
        let (a1, a2) = (self.params.alpha1, self.params.alpha2);
        let blocks: Vec<Vec<f64>> = (0..4 * kb)
            .into_par_iter()
            .map(|b| {
                let (fam, k) = (b / kb, b % kb);
                let i = k + 1;
                let st = &self.steps[i];
                let mut y = vec![0.0; lay.n_x];
                match fam {
                    0 | 1 => {
                        let sign = if fam == 0 { -1.0 } else { 1.0 };
                        for (yi, d) in y.iter_mut().zip(&st.d) {
                            *yi = sign * t * d;
                        }
                        let src = if fam == 0 { &data.source_u } else { &data.source_v };
                        if let Some(src) = src {
                            self.mass().matvec_add(t, &src[i], &mut y);
                        }
                        if k == 0 {
                            let init = if fam == 0 { &self.u0 } else { &self.v0 };
                            self.mass().matvec_add(1.0, init, &mut y);
                        }
                    }
                    _ => {
                        let (alpha, target, nl) = if fam == 2 {
                            (a1, &data.target_u[i], &st.c_nl)
                        } else {
                            (a2, &data.target_v[i], &st.h_nl)
                        };
                        self.mass().matvec(target, &mut y);
                        for (yi, n) in y.iter_mut().zip(nl) {
                            *yi = -t * (alpha * *yi + n);
                        }
                    }
                }
                y
            })
            .collect();
        blocks.concat()
    }

    /// Recovers `(p^0, q^0)` from the adjoint equations at the initial time.
    pub fn recover_initial_adjoints(&self, p1: &[f64], q1: &[f64]) -> (NodalField, NodalField) {
        let t = self.tau();
        let pat = self.mass().pattern();
        let m = self.mass().values();
        let s0 = &self.steps[0];
        let mut rp: Vec<f64> = self.c0.iter().map(|c| t * c).collect();
        self.mass().matvec_add(1.0, p1, &mut rp);
        pat.combo_matvec_add(&[(-t * self.params.alpha1, m), (-t, &s0.a1)], &self.u0, &mut rp);
        pat.combo_matvec_add(&[(-t, &s0.a12)], &self.v0, &mut rp);
        let mut rq: Vec<f64> = self.h0.iter().map(|c| t * c).collect();
        self.mass().matvec_add(1.0, q1, &mut rq);
        pat.combo_matvec_add(&[(-t, &s0.a12)], &self.u0, &mut rq);
        pat.combo_matvec_add(&[(-t * self.params.alpha2, m)], &self.v0, &mut rq);
        solve_interleaved(&self.initial_solver, &rp, &rq)
    }

    /// Final states from the last implicit step, where the control vanishes.
    pub fn recover_final_states(&self, u_prev: &[f64], v_prev: &[f64]) -> (NodalField, NodalField) {
        let mut ru = self.final_rhs[0].clone();
        self.mass().matvec_add(1.0, u_prev, &mut ru);
        let mut rv = self.final_rhs[1].clone();
        self.mass().matvec_add(1.0, v_prev, &mut rv);
        solve_interleaved(&self.final_solver, &ru, &rv)
    }

    /// Matching coefficients `tau gamma sqrt(alpha / beta)`.
    pub fn matching_coefficients(&self) -> [f64; 2] {
        let p = &self.params;
        let tg = self.tau() * p.gamma;
        [tg * (p.alpha1 / p.beta1).sqrt(), tg * (p.alpha2 / p.beta2).sqrt()]
    }
}

impl crate::krylov::LinearOperator for BweSystem<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn apply(&self, w: &[f64], y: &mut [f64]) {
        let lay = self.layout;
        let kb = lay.blocks;
        let p = &self.params;
        let (t, g) = (self.tau(), p.gamma);
        let pat = self.mass().pattern();
        let m = self.mass().values();
        let sa = [t * g * g / p.beta1, t * g * g / p.beta2];
        let blk = |fam: usize, k: usize| &w[lay.range(fam, k)];

        y.par_chunks_mut(lay.n_x).enumerate().for_each(|(b, yb)| {
            let (fam, k) = (b / kb, b % kb);
            let i = k + 1;
            let st = &self.steps[i];
            yb.iter_mut().for_each(|x| *x = 0.0);
            match fam {
                0 => {
                    pat.combo_matvec_add(&[(sa[0], m)], blk(0, k), yb);
                    pat.combo_matvec_add(&self.l1_terms(i), blk(2, k), yb);
                    pat.combo_matvec_add(&[(-t * g, &st.mu2)], blk(3, k), yb);
                    if k >= 1 {
                        pat.combo_matvec_add(&[(-1.0, m)], blk(2, k - 1), yb);
                    }
                }
                1 => {
                    pat.combo_matvec_add(&[(sa[1], m)], blk(1, k), yb);
                    pat.combo_matvec_add(&[(2.0 * t * g, &st.muv)], blk(2, k), yb);
                    pat.combo_matvec_add(&self.l2_terms(i), blk(3, k), yb);
                    if k >= 1 {
                        pat.combo_matvec_add(&[(-1.0, m)], blk(3, k - 1), yb);
                    }
                }
                2 => {
                    pat.combo_matvec_add(&self.l1_terms(i), blk(0, k), yb);
                    pat.combo_matvec_add(&[(2.0 * t * g, &st.muv)], blk(1, k), yb);
                    if k + 1 < kb {
                        pat.combo_matvec_add(&[(-1.0, m)], blk(0, k + 1), yb);
                    }
                    pat.combo_matvec_add(&[(-t * p.alpha1, m), (-t, &st.a1)], blk(2, k), yb);
                    pat.combo_matvec_add(&[(-t, &st.a12)], blk(3, k), yb);
                }
                _ => {
                    pat.combo_matvec_add(&[(-t * g, &st.mu2)], blk(0, k), yb);
                    pat.combo_matvec_add(&self.l2_terms(i), blk(1, k), yb);
                    if k + 1 < kb {
                        pat.combo_matvec_add(&[(-1.0, m)], blk(1, k + 1), yb);
                    }
                    pat.combo_matvec_add(&[(-t, &st.a12)], blk(2, k), yb);
                    pat.combo_matvec_add(&[(-t * p.alpha2, m)], blk(3, k), yb);
                }
            }
        });
    }
}

impl AllAtOnceSystem for BweSystem<'_> {
    fn layout(&self) -> Layout {
        self.layout
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn pack(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        traj.validate(self.layout.n_x)?;
        check_len(self.layout.blocks + 1, traj.n_t(), "trajectory time steps")?;
        let lay = self.layout;
        let mut w = vec![0.0; lay.dim()];
        for k in 0..lay.blocks {
            let i = k + 1;
            w[lay.range(0, k)].copy_from_slice(&negated(&traj.p[i]));
            w[lay.range(1, k)].copy_from_slice(&negated(&traj.q[i]));
            w[lay.range(2, k)].copy_from_slice(&traj.u[i]);
            w[lay.range(3, k)].copy_from_slice(&traj.v[i]);
        }
        Ok(w)
    }

    fn unpack(&self, w: &[f64]) -> Result<Trajectory> {
        let lay = self.layout;
        check_len(lay.dim(), w.len(), "solution vector")?;
        let p = &self.params;
        let n_t = lay.blocks + 1;
        let mut traj = Trajectory::zeros(Scheme::BackwardEuler, n_t, p.t_final, lay.n_x);
        traj.u[0] = self.u0.clone();
        traj.v[0] = self.v0.clone();
        for k in 0..lay.blocks {
            let i = k + 1;
            traj.p[i] = negated(&w[lay.range(0, k)]);
            traj.q[i] = negated(&w[lay.range(1, k)]);
            traj.u[i] = w[lay.range(2, k)].to_vec();
            traj.v[i] = w[lay.range(3, k)].to_vec();
        }
        let (p0, q0) = self.recover_initial_adjoints(&traj.p[1], &traj.q[1]);
        traj.p[0] = p0;
        traj.q[0] = q0;
        let (un, vn) = self.recover_final_states(&traj.u[n_t - 1], &traj.v[n_t - 1]);
        traj.u[n_t] = un;
        traj.v[n_t] = vn;
        traj.recover_controls(p.gamma, p.beta1, p.beta2);
        Ok(traj)
    }

    fn preconditioner(&self, cfg: &PrecondConfig) -> Result<MatchedSchurPreconditioner> {
        let kb = self.layout.blocks;
        let (t, g) = (self.tau(), self.params.gamma);
        let m = self.mass().values();
        let [d1, d2] = self.matching_coefficients();
        let pattern = self.mass().pattern().clone();
        let minus_m = combine(&[(-1.0, m)]);
        let blocks = (0..kb)
            .map(|k| {
                let i = k + 1;
                let mut l1 = self.l1_terms(i).to_vec();
                l1.push((d1, m));
                let mut l2 = self.l2_terms(i).to_vec();
                l2.push((d2, m));
                let upper = (k + 1 < kb).then(|| UpperBlock {
                    u00: minus_m.clone(),
                    u01: None,
                    u10: None,
                    u11: minus_m.clone(),
                });
                Ok(StepBlocks {
                    g00: CsrMatrix::new(pattern.clone(), combine(&l1))?,
                    g10: combine(&[(-t * g, &self.steps[i].mu2)]),
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
