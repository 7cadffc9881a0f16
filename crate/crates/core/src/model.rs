//! Schnakenberg kinetics, problem parameters and the manufactured test case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the identification problem on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchnakenbergParams {
    pub d_u: f64,
    pub d_v: f64,
    pub gamma: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub t_final: f64,
    pub n_t: usize,
}

impl SchnakenbergParams {
    /// `D_u = 1`, `D_v = 10`, `gamma = 2`, `alpha = 1`, `T = 1`.
    pub fn with_beta(beta: f64, n_t: usize) -> Self {
        Self {
            d_u: 1.0,
            d_v: 10.0,
            gamma: 2.0,
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: beta,
            beta2: beta,
            t_final: 1.0,
            n_t,
        }
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_t as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("D_u", self.d_u),
            ("D_v", self.d_v),
            ("gamma", self.gamma),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("T", self.t_final),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_t == 0 {
            return Err(Error::InvalidArgument("N_t must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(Phi, Psi) = (gamma (u - u^2 v), gamma u^2 v)`.
pub fn reaction_terms(u: f64, v: f64, gamma: f64) -> (f64, f64) {
    let uuv = u * u * v;
    (gamma * (u - uuv), gamma * uuv)
}

/// First and second partial derivatives of the reaction terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionDerivatives {
    pub phi_u: f64,
    pub phi_v: f64,
    pub psi_u: f64,
    pub psi_v: f64,
    pub phi_uu: f64,
    pub phi_uv: f64,
    pub psi_uu: f64,
    pub psi_uv: f64,
}

pub fn reaction_derivatives(u: f64, v: f64, gamma: f64) -> ReactionDerivatives {
    ReactionDerivatives {
        phi_u: gamma * (1.0 - 2.0 * u * v),
        phi_v: -gamma * u * u,
        psi_u: 2.0 * gamma * u * v,
        psi_v: gamma * u * u,
        phi_uu: -2.0 * gamma * v,
        phi_uv: -2.0 * gamma * u,
        psi_uu: 2.0 * gamma * v,
        psi_uv: 2.0 * gamma * u,
    }
}

/// Homogeneous steady state `(a + b, b / (a + b)^2)` for constant controls.
pub fn steady_state(a: f64, b: f64) -> Result<(f64, f64)> {
    let s = a + b;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "steady state requires a + b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok((s, b / (s * s)))
}

/// Closed-form solution used for convergence studies, together with the
/// desired states and source terms that make it optimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub d_u: f64,
    pub d_v: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_final: f64,
}

impl ManufacturedCase {
    pub fn from_params(p: &SchnakenbergParams) -> Self {
        Self {
            d_u: p.d_u,
            d_v: p.d_v,
            gamma: p.gamma,
            alpha: p.alpha1,
            beta: p.beta1,
            t_final: p.t_final,
        }
    }

    pub fn kappa(x: f64, y: f64) -> f64 {
        (2.0 * PI * x).cos() * (2.0 * PI * y).cos()
    }

    pub fn eta(x: f64, y: f64) -> f64 {
        (PI * x).cos() * (PI * y).cos()
    }

    pub fn u(&self, t: f64, x: f64, y: f64) -> f64 {
        (0.1 * t).exp() * (Self::kappa(x, y) + 1.0)
    }

    pub fn v(&self, t: f64, x: f64, y: f64) -> f64 {
        (0.15 * t).exp() * (Self::eta(x, y) + 1.0)
    }

    pub fn p(&self, t: f64, x: f64, y: f64) -> f64 {
        ((0.1 * t).exp() - (0.1 * self.t_final).exp()) * (Self::kappa(x, y) + 1.0)
    }

    pub fn q(&self, t: f64, x: f64, y: f64) -> f64 {
        ((0.15 * t).exp() - (0.15 * self.t_final).exp()) * (Self::eta(x, y) + 1.0)
    }

    /// `(u, v, p, q)` at `(t, x, y)`.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> [f64; 4] {
        [self.u(t, x, y), self.v(t, x, y), self.p(t, x, y), self.q(t, x, y)]
    }

    /// Desired states `(u_hat, v_hat)`.
    pub fn targets(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let g = self.gamma;
        let k = Self::kappa(x, y);
        let e = Self::eta(x, y);
        let [u, v, p, q] = self.eval(t, x, y);
        let e1 = (0.1 * t).exp();
        let e1t = (0.1 * self.t_final).exp();
        let e2 = (0.15 * t).exp();
        let e2t = (0.15 * self.t_final).exp();
        let pi2 = PI * PI;
        let uh = (-0.1 * e1 * (k + 1.0)
            + 8.0 * self.d_u * pi2 * (e1 - e1t) * k
            + self.alpha * u
            + 2.0 * g * u * v * (q - p)
            + g * p)
            / self.alpha;
        let vh = (-0.15 * e2 * (e + 1.0)
            + 2.0 * self.d_v * pi2 * (e2 - e2t) * e
            + self.alpha * v
            + g * u * u * (q - p))
            / self.alpha;
        (uh, vh)
    }

    /// Source terms `(f, g)` added to the state equations.
    pub fn sources(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let g = self.gamma;
        let k = Self::kappa(x, y);
        let e = Self::eta(x, y);
        let [u, v, p, q] = self.eval(t, x, y);
        let pi2 = PI * PI;
        let uuv = u * u * v;
        let f = (0.1 + g) * u + 8.0 * self.d_u * pi2 * (0.1 * t).exp() * k - g * uuv - g * g / self.beta * p;
        let gs = 0.15 * v + 2.0 * self.d_v * pi2 * (0.15 * t).exp() * e + g * uuv - g * g / self.beta * q;
        (f, gs)
    }
}
