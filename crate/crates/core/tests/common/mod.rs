//! Dense reference implementations shared by the integration tests.
//!
//! Everything here is computed from element integrals of barycentric
//! monomials and plain dense loops, without the library's assembly code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schnak_core::fem::{assemble_stiffness, FemSpace, MeshP1};
use schnak_core::krylov::LinearOperator;
use schnak_core::model::SchnakenbergParams;
use schnak_core::system::{assemble, PrecondConfig};
use schnak_core::trajectory::{ProblemData, Scheme, Trajectory};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Exact integrals of products of P1 functions on a fixed mesh.
pub struct ExactIntegrals {
    pub mesh: MeshP1,
    /// Per triangle: node indices and `int l_a l_b l_c l_d`.
    elems: Vec<([usize; 3], [[[[f64; 3]; 3]; 3]; 3])>,
    pub stiffness: DMatrix<f64>,
}

impl ExactIntegrals {
    pub fn new(n: usize) -> Self {
        let mesh = MeshP1::new(n).unwrap();
        let elems = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let area = mesh.signed_area(t).abs();
                let mut tab = [[[[0.0; 3]; 3]; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            for d in 0..3 {
                                let mut e = [0usize; 3];
                                for i in [a, b, c, d] {
                                    e[i] += 1;
                                }
                                tab[a][b][c][d] = 2.0 * area * factorial(e[0]) * factorial(e[1]) * factorial(e[2])
                                    / factorial(6);
                            }
                        }
                    }
                }
                (*tri, tab)
            })
            .collect();
        let k = assemble_stiffness(&mesh);
        let nn = mesh.num_nodes();
        let stiffness = DMatrix::from_fn(nn, nn, |i, j| k.get(i, j));
        Self { mesh, elems, stiffness }
    }

    pub fn n_x(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// `int f1 f2 f3 f4` for nodal fields; missing factors count as one.
    pub fn integral(&self, fields: &[&[f64]]) -> f64 {
        assert!(fields.len() <= 4);
        let one = vec![1.0; self.n_x()];
        let mut f: Vec<&[f64]> = fields.to_vec();
        while f.len() < 4 {
            f.push(&one);
        }
        // Padding with the constant one works because sum_a l_a = 1.
        let mut s = 0.0;
        for (tri, tab) in &self.elems {
            let l: Vec<[f64; 3]> = f.iter().map(|g| tri.map(|r| g[r])).collect();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        for d in 0..3 {
                            s += l[0][a] * l[1][b] * l[2][c] * l[3][d] * tab[a][b][c][d];
                        }
                    }
                }
            }
        }
        s
    }

    /// Dense `int w1 w2 phi_i phi_j`.
    pub fn weighted_mass(&self, weights: &[&[f64]]) -> DMatrix<f64> {
        assert!(weights.len() <= 2);
        let nn = self.n_x();
        let one = vec![1.0; nn];
        let mut w: Vec<&[f64]> = weights.to_vec();
        while w.len() < 2 {
            w.push(&one);
        }
        let mut m = DMatrix::zeros(nn, nn);
        for (tri, tab) in &self.elems {
            let l0 = tri.map(|r| w[0][r]);
            let l1 = tri.map(|r| w[1][r]);
            for a in 0..3 {
                for b in 0..3 {
                    let mut s = 0.0;
                    for c in 0..3 {
                        for d in 0..3 {
                            s += l0[c] * l1[d] * tab[a][b][c][d];
                        }
                    }
                    m[(tri[a], tri[b])] += s;
                }
            }
        }
        m
    }

    pub fn mass(&self) -> DMatrix<f64> {
        self.weighted_mass(&[])
    }

    /// Dense `int w1 w2 w3 phi_i`.
    pub fn weighted_load(&self, weights: &[&[f64]]) -> DVector<f64> {
        let nn = self.n_x();
        DVector::from_fn(nn, |i, _| {
            let mut e = vec![0.0; nn];
            e[i] = 1.0;
            let mut f: Vec<&[f64]> = weights.to_vec();
            f.push(&e);
            self.integral(&f)
        })
    }
}

pub fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// A random problem instance and linearization point on the `n = 2` mesh.
pub struct Instance {
    pub params: SchnakenbergParams,
    pub data: ProblemData,
    pub lin: Trajectory,
}

pub fn random_instance(scheme: Scheme, n: usize, n_t: usize, beta: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = (n + 1) * (n + 1);
    let mut field = |lo: f64, hi: f64| -> Vec<f64> { (0..nx).map(|_| rng.gen_range(lo..hi)).collect() };
    let mut params = SchnakenbergParams::with_beta(beta, n_t);
    params.alpha2 = 0.7;
    params.beta2 = 1.3 * beta;
    let levels = |f: &mut dyn FnMut(f64, f64) -> Vec<f64>, lo, hi| (0..=n_t).map(|_| f(lo, hi)).collect::<Vec<_>>();
    let target_u = levels(&mut field, 0.5, 1.5);
    let target_v = levels(&mut field, 0.5, 1.5);
    let source_u = levels(&mut field, -1.0, 1.0);
    let source_v = levels(&mut field, -1.0, 1.0);
    let mut lin = Trajectory::zeros(scheme, n_t, params.t_final, nx);
    for i in 0..=n_t {
        lin.u[i] = field(0.5, 1.5);
        lin.v[i] = field(0.5, 1.5);
        lin.p[i] = field(-0.3, 0.3);
        lin.q[i] = field(-0.3, 0.3);
    }
    if scheme == Scheme::BackwardEuler {
        lin.p[n_t] = vec![0.0; nx];
        lin.q[n_t] = vec![0.0; nx];
    }
    lin.recover_controls(params.gamma, params.beta1, params.beta2);
    let data = ProblemData {
        u0: lin.u[0].clone(),
        v0: lin.v[0].clone(),
        target_u,
        target_v,
        source_u: Some(source_u),
        source_v: Some(source_v),
    };
    Instance { params, data, lin }
}

/// Materializes a linear operator column by column.
pub fn dense_operator(op: &dyn LinearOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        a.set_column(j, &dv(&col));
        e[j] = 0.0;
    }
    a
}

/// Unknown vector `w = [-p, -q, u, v]` split into nodal blocks.
pub struct Blocks<'a> {
    pub w: &'a [f64],
    pub nx: usize,
    pub kb: usize,
}

impl Blocks<'_> {
    pub fn get(&self, fam: usize, k: usize) -> &[f64] {
        let s = (fam * self.kb + k) * self.nx;
        &self.w[s..s + self.nx]
    }
}

fn sq_dist(ex: &ExactIntegrals, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    ex.integral(&[&d, &d])
}

fn quad_k(ex: &ExactIntegrals, a: &[f64], b: &[f64]) -> f64 {
    (dv(a).transpose() * &ex.stiffness * dv(b))[(0, 0)]
}

/// `<p, N_u(u, v)>` for the reaction-diffusion operator of the first species.
fn pair_nu(ex: &ExactIntegrals, pr: &SchnakenbergParams, p: &[f64], u: &[f64], v: &[f64]) -> f64 {
    pr.d_u * quad_k(ex, p, u) + pr.gamma * ex.integral(&[p, u]) - pr.gamma * ex.integral(&[p, u, u, v])
}

fn pair_nv(ex: &ExactIntegrals, pr: &SchnakenbergParams, q: &[f64], u: &[f64], v: &[f64]) -> f64 {
    pr.d_v * quad_k(ex, q, v) + pr.gamma * ex.integral(&[q, u, u, v])
}

/// Reduced discrete Lagrangian in the system unknowns `w = [-p, -q, u, v]`,
/// with the controls eliminated through `a = gamma / beta1 p`.
///
/// Staggered scheme: trapezoidal states and reactions, controls and
/// adjoints at half steps, trapezoidal state cost.
pub fn lagrangian_sv(ex: &ExactIntegrals, pr: &SchnakenbergParams, data: &ProblemData, w: &[f64]) -> f64 {
    let nx = ex.n_x();
    let kb = pr.n_t;
    let b = Blocks { w, nx, kb };
    let tau = pr.tau();
    let g = pr.gamma;
    let u = |i: usize| if i == 0 { data.u0.as_slice() } else { b.get(2, i - 1) };
    let v = |i: usize| if i == 0 { data.v0.as_slice() } else { b.get(3, i - 1) };
    let src_u = data.source_u.as_ref().unwrap();
    let src_v = data.source_v.as_ref().unwrap();
    let mut l = 0.0;
    for i in 1..=kb {
        let c = if i == kb { 0.5 } else { 1.0 };
        l += tau * c * (0.5 * pr.alpha1 * sq_dist(ex, u(i), &data.target_u[i]) + 0.5 * pr.alpha2 * sq_dist(ex, v(i), &data.target_v[i]));
    }
    for k in 0..kb {
        let p: Vec<f64> = b.get(0, k).iter().map(|x| -x).collect();
        let q: Vec<f64> = b.get(1, k).iter().map(|x| -x).collect();
        l -= tau * g * g / (2.0 * pr.beta1) * ex.integral(&[&p, &p]);
        l -= tau * g * g / (2.0 * pr.beta2) * ex.integral(&[&q, &q]);
        l += ex.integral(&[&p, u(k + 1)]) - ex.integral(&[&p, u(k)]);
        l += 0.5 * tau * (pair_nu(ex, pr, &p, u(k), v(k)) + pair_nu(ex, pr, &p, u(k + 1), v(k + 1)));
        l -= 0.5 * tau * (ex.integral(&[&p, &src_u[k]]) + ex.integral(&[&p, &src_u[k + 1]]));
        l += ex.integral(&[&q, v(k + 1)]) - ex.integral(&[&q, v(k)]);
        l += 0.5 * tau * (pair_nv(ex, pr, &q, u(k), v(k)) + pair_nv(ex, pr, &q, u(k + 1), v(k + 1)));
        l -= 0.5 * tau * (ex.integral(&[&q, &src_v[k]]) + ex.integral(&[&q, &src_v[k + 1]]));
    }
    l
}

/// Backward-Euler counterpart over the interior steps `1..N_t-1`.
pub fn lagrangian_bwe(ex: &ExactIntegrals, pr: &SchnakenbergParams, data: &ProblemData, w: &[f64]) -> f64 {
    let nx = ex.n_x();
    let kb = pr.n_t - 1;
    let b = Blocks { w, nx, kb };
    let tau = pr.tau();
    let g = pr.gamma;
    let u = |i: usize| if i == 0 { data.u0.as_slice() } else { b.get(2, i - 1) };
    let v = |i: usize| if i == 0 { data.v0.as_slice() } else { b.get(3, i - 1) };
    let src_u = data.source_u.as_ref().unwrap();
    let src_v = data.source_v.as_ref().unwrap();
    let mut l = 0.0;
    for i in 1..=kb {
        let p: Vec<f64> = b.get(0, i - 1).iter().map(|x| -x).collect();
        let q: Vec<f64> = b.get(1, i - 1).iter().map(|x| -x).collect();
        l += tau * (0.5 * pr.alpha1 * sq_dist(ex, u(i), &data.target_u[i]) + 0.5 * pr.alpha2 * sq_dist(ex, v(i), &data.target_v[i]));
        l -= tau * g * g / (2.0 * pr.beta1) * ex.integral(&[&p, &p]);
        l -= tau * g * g / (2.0 * pr.beta2) * ex.integral(&[&q, &q]);
        l += ex.integral(&[&p, u(i)]) - ex.integral(&[&p, u(i - 1)]);
        l += tau * pair_nu(ex, pr, &p, u(i), v(i)) - tau * ex.integral(&[&p, &src_u[i]]);
        l += ex.integral(&[&q, v(i)]) - ex.integral(&[&q, v(i - 1)]);
        l += tau * pair_nv(ex, pr, &q, u(i), v(i)) - tau * ex.integral(&[&q, &src_v[i]]);
    }
    l
}

/// Gradient of a polynomial of degree at most four, exact up to rounding:
/// central differences have an `eps^2` error only, removed by Richardson
/// extrapolation.
pub fn quartic_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let mut diff = |h: f64| {
                y[i] = x[i] + h;
                let fp = f(&y);
                y[i] = x[i] - h;
                let fm = f(&y);
                y[i] = x[i];
                (fp - fm) / (2.0 * h)
            };
            let (d1, d2) = (diff(1.0), diff(0.5));
            (4.0 * d2 - d1) / 3.0
        })
        .collect()
}

/// Hessian of a polynomial of degree at most four, exact up to rounding.
pub fn quartic_hessian(f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64]) -> DMatrix<f64> {
    use rayon::prelude::*;
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut y = x.to_vec();
            (0..n)
                .map(|j| {
                    if j < i {
                        return 0.0;
                    }
                    let mut diff = |h: f64| {
                        let mut eval = |si: f64, sj: f64| {
                            y[i] += si * h;
                            y[j] += sj * h;
                            let v = f(&y);
                            y[i] = x[i];
                            y[j] = x[j];
                            v
                        };
                        (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h)
                    };
                    let (d1, d2) = (diff(1.0), diff(0.5));
                    (4.0 * d2 - d1) / 3.0
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| if i <= j { rows[i][j] } else { rows[j][i] })
}

/// Entrywise brute-force assembly of the staggered all-at-once matrix from
/// dense element integrals.
pub fn brute_force_sv(ex: &ExactIntegrals, pr: &SchnakenbergParams, lin: &Trajectory) -> DMatrix<f64> {
    let nx = ex.n_x();
    let kb = pr.n_t;
    let (t, g) = (pr.tau(), pr.gamma);
    let m = ex.mass();
    let k = &ex.stiffness;
    let muv = |i: usize| ex.weighted_mass(&[&lin.u[i], &lin.v[i]]);
    let mu2 = |i: usize| ex.weighted_mass(&[&lin.u[i], &lin.u[i]]);
    let s = |i: usize| {
        let mut s = vec![0.0; nx];
        for j in [i, i + 1] {
            if j >= 1 && j <= kb {
                for r in 0..nx {
                    s[r] += lin.q[j][r] - lin.p[j][r];
                }
            }
        }
        s
    };
    let l1 = |i: usize, sign: f64| &m * (sign + t * g / 2.0) + k * (t * pr.d_u / 2.0) - muv(i) * (t * g);
    let l2 = |i: usize, sign: f64| &m * sign + k * (t * pr.d_v / 2.0) + mu2(i) * (t * g / 2.0);

    let dim = 4 * kb * nx;
    let mut a = DMatrix::zeros(dim, dim);
    let mut put = |fr: usize, kr: usize, fc: usize, kc: usize, blk: &DMatrix<f64>| {
        let (r0, c0) = ((fr * kb + kr) * nx, (fc * kb + kc) * nx);
        let mut view = a.view_mut((r0, c0), (nx, nx));
        view += blk;
    };
    for kk in 0..kb {
        let i = kk + 1;
        let ck = if kk + 1 == kb { 0.5 } else { 1.0 };
        let si = s(i);
        put(0, kk, 0, kk, &(&m * (t * g * g / pr.beta1)));
        put(1, kk, 1, kk, &(&m * (t * g * g / pr.beta2)));
        // State rows at the step from i - 1 to i.
        put(0, kk, 2, kk, &l1(i, 1.0));
        put(0, kk, 3, kk, &(mu2(i) * (-t * g / 2.0)));
        put(1, kk, 2, kk, &(muv(i) * (t * g)));
        put(1, kk, 3, kk, &l2(i, 1.0));
        if kk >= 1 {
            put(0, kk, 2, kk - 1, &l1(i - 1, -1.0));
            put(0, kk, 3, kk - 1, &(mu2(i - 1) * (-t * g / 2.0)));
            put(1, kk, 2, kk - 1, &(muv(i - 1) * (t * g)));
            put(1, kk, 3, kk - 1, &l2(i - 1, -1.0));
        }
        // Adjoint rows at step i.
        put(2, kk, 0, kk, &l1(i, 1.0).transpose());
        put(2, kk, 1, kk, &(muv(i) * (t * g)));
        put(3, kk, 0, kk, &(mu2(i) * (-t * g / 2.0)));
        put(3, kk, 1, kk, &l2(i, 1.0).transpose());
        if kk + 1 < kb {
            put(2, kk, 0, kk + 1, &l1(i, -1.0).transpose());
            put(2, kk, 1, kk + 1, &(muv(i) * (t * g)));
            put(3, kk, 0, kk + 1, &(mu2(i) * (-t * g / 2.0)));
            put(3, kk, 1, kk + 1, &l2(i, -1.0).transpose());
        }
        let a1 = ex.weighted_mass(&[&lin.v[i], &si]) * g;
        let a12 = ex.weighted_mass(&[&lin.u[i], &si]) * g;
        put(2, kk, 2, kk, &(-(&m * (t * pr.alpha1 * ck) + &a1 * t)));
        put(2, kk, 3, kk, &(-(&a12 * t)));
        put(3, kk, 2, kk, &(-(&a12 * t)));
        put(3, kk, 3, kk, &(-(&m * (t * pr.alpha2 * ck))));
    }
    a
}

/// Entrywise brute-force assembly of the backward-Euler all-at-once matrix.
pub fn brute_force_bwe(ex: &ExactIntegrals, pr: &SchnakenbergParams, lin: &Trajectory) -> DMatrix<f64> {
    let nx = ex.n_x();
    let kb = pr.n_t - 1;
    let (t, g) = (pr.tau(), pr.gamma);
    let m = ex.mass();
    let k = &ex.stiffness;
    let muv = |i: usize| ex.weighted_mass(&[&lin.u[i], &lin.v[i]]);
    let mu2 = |i: usize| ex.weighted_mass(&[&lin.u[i], &lin.u[i]]);
    let l1 = |i: usize| &m * (1.0 + t * g) + k * (t * pr.d_u) - muv(i) * (2.0 * t * g);
    let l2 = |i: usize| &m + k * (t * pr.d_v) + mu2(i) * (t * g);

    let dim = 4 * kb * nx;
    let mut a = DMatrix::zeros(dim, dim);
    let mut put = |fr: usize, kr: usize, fc: usize, kc: usize, blk: &DMatrix<f64>| {
        let (r0, c0) = ((fr * kb + kr) * nx, (fc * kb + kc) * nx);
        let mut view = a.view_mut((r0, c0), (nx, nx));
        view += blk;
    };
    let minus_m = -&m;
    for kk in 0..kb {
        let i = kk + 1;
        let s: Vec<f64> = (0..nx).map(|r| lin.q[i][r] - lin.p[i][r]).collect();
        put(0, kk, 0, kk, &(&m * (t * g * g / pr.beta1)));
        put(1, kk, 1, kk, &(&m * (t * g * g / pr.beta2)));
        put(0, kk, 2, kk, &l1(i));
        put(0, kk, 3, kk, &(mu2(i) * (-t * g)));
        put(1, kk, 2, kk, &(muv(i) * (2.0 * t * g)));
        put(1, kk, 3, kk, &l2(i));
        if kk >= 1 {
            put(0, kk, 2, kk - 1, &minus_m);
            put(1, kk, 3, kk - 1, &minus_m);
        }
        put(2, kk, 0, kk, &l1(i).transpose());
        put(2, kk, 1, kk, &(muv(i) * (2.0 * t * g)));
        put(3, kk, 0, kk, &(mu2(i) * (-t * g)));
        put(3, kk, 1, kk, &l2(i).transpose());
        if kk + 1 < kb {
            put(2, kk, 0, kk + 1, &minus_m);
            put(3, kk, 1, kk + 1, &minus_m);
        }
        let a1 = ex.weighted_mass(&[&lin.v[i], &s]) * (2.0 * g);
        let a12 = ex.weighted_mass(&[&lin.u[i], &s]) * (2.0 * g);
        put(2, kk, 2, kk, &(-(&m * (t * pr.alpha1) + &a1 * t)));
        put(2, kk, 3, kk, &(-(&a12 * t)));
        put(3, kk, 2, kk, &(-(&a12 * t)));
        put(3, kk, 3, kk, &(-(&m * (t * pr.alpha2))));
    }
    a
}

/// Largest absolute entry of `a - b` relative to the largest entry of `b`.
pub fn rel_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

/// Worst relative defect `|x.Ay - y.Ax|` over 20 random probe pairs.
pub fn symmetry_defect(op: &dyn LinearOperator, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ax = op.apply_vec(&x);
        let ay = op.apply_vec(&y);
        let xay: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
        let yax: f64 = y.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let scale = (norm(&x) * norm(&ay)).max(norm(&y) * norm(&ax));
        worst = worst.max((xay - yax).abs() / scale);
    }
    worst
}

/// Extreme eigenvalues of `S_hat^{-1} S` with `S = C + B A^{-1} B^T` on
/// `n = 2`, `N_t = 3` at zero linearization.
pub fn schur_spectrum(scheme: Scheme) -> (f64, f64) {
    let space = FemSpace::new(2).unwrap();
    let mut inst = random_instance(scheme, 2, 3, 0.05, 0);
    inst.lin = Trajectory::zeros(scheme, 3, 1.0, 9);
    let sys = assemble(scheme, &space, &inst.params, &inst.lin, &inst.data).unwrap();
    let pre = sys.preconditioner(&PrecondConfig::default()).unwrap();
    let a = dense_operator(sys.as_ref());
    let h = a.nrows() / 2;
    let a11 = a.view((0, 0), (h, h)).into_owned();
    let b = a.view((h, 0), (h, h)).into_owned();
    let c = -a.view((h, h), (h, h)).into_owned();
    let s = &c + &b * a11.lu().solve(&b.transpose()).unwrap();
    let mut s_hat_inv = DMatrix::zeros(h, h);
    let mut e = vec![0.0; h];
    let mut col = vec![0.0; h];
    for j in 0..h {
        e[j] = 1.0;
        pre.apply_schur_inverse(&e, &mut col);
        s_hat_inv.set_column(j, &dv(&col));
        e[j] = 0.0;
    }
    let s_hat_inv = (&s_hat_inv + s_hat_inv.transpose()) * 0.5;
    let l = ((&s + s.transpose()) * 0.5).cholesky().unwrap().l();
    let eig = nalgebra::SymmetricEigen::new(l.transpose() * s_hat_inv * l).eigenvalues;
    (eig.min(), eig.max())
}
