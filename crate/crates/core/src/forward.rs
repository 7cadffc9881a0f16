//! Forward Schnakenberg simulation with constant controls, used to
//! generate pattern snapshots that serve as desired states.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::{interpolate_nodal, FemSpace, MeshP1, NodalField};
use crate::krylov::BandedCholesky;
use crate::model::{reaction_derivatives, steady_state};
use crate::sparse::CsrMatrix;

/// Field magnitude beyond which a forward run is declared diverged.
const BLOWUP: f64 = 1e6;

/// Localized Gaussian bump added to the steady state of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub center: [f64; 2],
    /// Decay rate `w` in `exp(-w |x - center|^2)`.
    pub width: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            center: [1.0 / 3.0, 0.5],
            width: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardConfig {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub d_u: f64,
    pub d_v: f64,
    /// Cells per side of the mesh.
    pub n: usize,
    pub t_final: f64,
    pub dt: f64,
    pub perturbation: Perturbation,
    /// Times at which `(u, v)` is recorded; each must be a multiple of `dt`.
    pub snapshot_times: Vec<f64>,
}

impl ForwardConfig {
    /// Defaults for everything except the controls, `gamma` and the mesh.
    pub fn new(a: f64, b: f64, gamma: f64, n: usize) -> Self {
        Self {
            a,
            b,
            gamma,
            d_u: 1.0,
            d_v: 10.0,
            n,
            t_final: 5.0,
            dt: 1e-3,
            perturbation: Perturbation::default(),
            snapshot_times: vec![5.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("gamma", self.gamma), ("D_u", self.d_u), ("D_v", self.d_v), ("dt", self.dt)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!("T must be non-negative, got {}", self.t_final)));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one cell".into()));
        }
        for &t in &self.snapshot_times {
            self.step_of(t)?;
        }
        if self.a + self.b > 0.0 {
            let amp = self.reaction_amplification()?;
            if amp > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "dt = {} makes the explicit reaction step unstable at the steady state \
                     (amplification {amp:.6})",
                    self.dt
                )));
            }
        }
        Ok(())
    }

    /// Largest `|1 + dt lambda|` over the eigenvalues of the kinetics
    /// Jacobian at the steady state. This governs the spatially constant
    /// mode, which diffusion does not damp. Returns 0 when the steady state
    /// is itself unstable, since no step size can fix that.
    pub fn reaction_amplification(&self) -> Result<f64> {
        let (us, vs) = steady_state(self.a, self.b)?;
        let j = reaction_derivatives(us, vs, self.gamma);
        let (tr, det) = (-j.phi_u - j.psi_v, j.phi_u * j.psi_v - j.phi_v * j.psi_u);
        let disc = tr * tr / 4.0 - det;
        let eig = if disc >= 0.0 {
            [(tr / 2.0 + disc.sqrt(), 0.0), (tr / 2.0 - disc.sqrt(), 0.0)]
        } else {
            [(tr / 2.0, (-disc).sqrt()), (tr / 2.0, -(-disc).sqrt())]
        };
        if eig.iter().any(|e| e.0 >= 0.0) {
            return Ok(0.0);
        }
        Ok(eig
            .iter()
            .map(|&(re, im)| ((1.0 + self.dt * re).powi(2) + (self.dt * im).powi(2)).sqrt())
            .fold(0.0, f64::max))
    }

    pub fn num_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn step_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(t >= 0.0 && t <= self.t_final * (1.0 + 1e-12)) || (k * self.dt - t).abs() > 1e-9 * self.dt.max(t) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} is not a step of dt = {} in [0, {}]",
                self.dt, self.t_final
            )));
        }
        Ok(k as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub u: NodalField,
    pub v: NodalField,
    /// `int u` and `int v` over the domain.
    pub mass: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardRun {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
}

/// Homogeneous steady state with a Gaussian bump added to `u`.
pub fn garvie_init(a: f64, b: f64, mesh: &MeshP1, pert: &Perturbation) -> Result<(NodalField, NodalField)> {
    let (us, vs) = steady_state(a, b)?;
    let [cx, cy] = pert.center;
    let u0 = interpolate_nodal(mesh, |x, y| {
        us + pert.amplitude * (-pert.width * ((x - cx).powi(2) + (y - cy).powi(2))).exp()
    })?;
    Ok((u0, vec![vs; mesh.num_nodes()]))
}

/// Range of `|k|^2` whose Fourier modes grow about the steady state, or
/// `None` when the steady state is diffusively stable.
pub fn unstable_band(a: f64, b: f64, gamma: f64, d_u: f64, d_v: f64) -> Result<Option<(f64, f64)>> {
    let (us, vs) = steady_state(a, b)?;
    let j = reaction_derivatives(us, vs, gamma);
    // Linearization of u_t = D_u lap u - Phi + gamma a (and the v analogue).
    let (fu, fv, gu, gv) = (-j.phi_u, -j.phi_v, -j.psi_u, -j.psi_v);
    let det = fu * gv - fv * gu;
    // h(k2) = D_u D_v k2^2 - (D_v fu + D_u gv) k2 + det is negative in the band.
    let mid = d_v * fu + d_u * gv;
    let disc = mid * mid - 4.0 * d_u * d_v * det;
    if det <= 0.0 || fu + gv >= 0.0 || mid <= 0.0 || disc <= 0.0 {
        return Ok(None);
    }
    let r = disc.sqrt();
    Ok(Some(((mid - r) / (2.0 * d_u * d_v), (mid + r) / (2.0 * d_u * d_v))))
}

/// Integrates with implicit diffusion and explicit reaction:
/// `(M + dt D K) u^{n+1} = M (u^n + dt (gamma a - Phi(u^n, v^n)))`.
pub fn simulate(cfg: &ForwardConfig, space: &FemSpace, u0: &[f64], v0: &[f64]) -> Result<ForwardRun> {
    cfg.validate()?;
    let n_x = space.num_nodes();
    check_len(n_x, u0.len(), "initial u")?;
    check_len(n_x, v0.len(), "initial v")?;
    if space.mesh.n() != cfg.n {
        return Err(Error::InvalidArgument(format!(
            "config asks for n = {}, space has n = {}",
            cfg.n,
            space.mesh.n()
        )));
    }
    let factor = |d: f64| -> Result<BandedCholesky> {
        let m = CsrMatrix::linear_combination(&[(1.0, &space.mass), (cfg.dt * d, &space.stiffness)])?;
        BandedCholesky::from_csr(&m)
    };
    let (lu, lv) = (factor(cfg.d_u)?, factor(cfg.d_v)?);
    let ones = vec![1.0; n_x];
    let integral = |f: &[f64]| space.mass_inner(&ones, f);

    let mut wanted: Vec<(usize, f64)> = cfg
        .snapshot_times
        .iter()
        .map(|&t| cfg.step_of(t).map(|k| (k, t)))
        .collect::<Result<_>>()?;
    wanted.sort_by_key(|w| w.0);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut next = wanted.iter().peekable();

    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let steps = cfg.num_steps();
    let (g, dt) = (cfg.gamma, cfg.dt);
    for step in 0..=steps {
        while let Some(&&(k, t)) = next.peek() {
            if k != step {
                break;
            }
            snapshots.push(Snapshot {
                time: t,
                u: u.clone(),
                v: v.clone(),
                mass: [integral(&u), integral(&v)],
            });
            next.next();
        }
        if step == steps {
            break;
        }
        let ru: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(&x, &y)| x + dt * g * (cfg.a - x + x * x * y))
            .collect();
        let rv: Vec<f64> = u.iter().zip(&v).map(|(&x, &y)| y + dt * g * (cfg.b - x * x * y)).collect();
        u = space.load(&ru);
        v = space.load(&rv);
        lu.solve_in_place(&mut u);
        lv.solve_in_place(&mut v);
        if u.iter().chain(&v).any(|x| !(x.abs() <= BLOWUP)) {
            return Err(Error::Diverged {
                step: step + 1,
                time: (step + 1) as f64 * dt,
            });
        }
    }
    Ok(ForwardRun { snapshots, steps })
}

/// Desired states ramping linearly from zero at `t = 0` to the snapshot at
/// the final step: `u_hat^i = (i / N_t) u_T`.
pub fn build_targets(u_final: &[f64], v_final: &[f64], n_t: usize) -> (Vec<NodalField>, Vec<NodalField>) {
    let ramp = |f: &[f64]| -> Vec<NodalField> {
        (0..=n_t)
            .map(|i| {
                let s = i as f64 / n_t as f64;
                f.iter().map(|x| s * x).collect()
            })
            .collect()
    };
    (ramp(u_final), ramp(v_final))
}
