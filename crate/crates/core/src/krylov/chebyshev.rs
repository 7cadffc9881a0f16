use super::operator::LinearOperator;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Fixed-step Chebyshev semi-iteration approximating `M^{-1}` for a P1 mass
/// matrix.
///
/// The iteration runs on `D^{-1/2} M D^{-1/2}` (with `D = diag(M)`), whose
/// spectrum lies in `[1/2, 2]` for linear triangles, always from a zero
/// initial guess. The result is a fixed polynomial in the scaled matrix and
/// therefore a symmetric positive definite linear operator.
#[derive(Debug, Clone)]
pub struct ChebyshevMass {
    matrix: CsrMatrix,
    inv_sqrt_diag: Vec<f64>,
    iterations: usize,
    lambda_min: f64,
    lambda_max: f64,
}

impl ChebyshevMass {
    pub fn new(matrix: CsrMatrix, iterations: usize) -> Result<Self> {
        Self::with_bounds(matrix, iterations, 0.5, 2.0)
    }

    pub fn with_bounds(matrix: CsrMatrix, iterations: usize, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidArgument("Chebyshev needs at least one iteration".into()));
        }
        if !(0.0 < lambda_min && lambda_min < lambda_max) {
            return Err(Error::InvalidArgument(format!(
                "invalid spectral interval [{lambda_min}, {lambda_max}]"
            )));
        }
        let diag = matrix.diagonal();
        if let Some(d) = diag.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::InvalidArgument(format!("non-positive mass diagonal entry {d}")));
        }
        let inv_sqrt_diag = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
        Ok(Self {
            matrix,
            inv_sqrt_diag,
            iterations,
            lambda_min,
            lambda_max,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.apply(r, &mut z);
        z
    }
}

impl LinearOperator for ChebyshevMass {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let s = &self.inv_sqrt_diag;
        let theta = 0.5 * (self.lambda_max + self.lambda_min);
        let delta = 0.5 * (self.lambda_max - self.lambda_min);
        let sigma1 = theta / delta;

        // Work in scaled variables: solve (S M S) y = S r, then z = S y.
        let mut res: Vec<f64> = (0..n).map(|i| s[i] * r[i]).collect();
        let mut y = vec![0.0; n];
        let mut d: Vec<f64> = res.iter().map(|v| v / theta).collect();
        let mut rho = 1.0 / sigma1;
        let mut sd = vec![0.0; n];
        let mut asd = vec![0.0; n];
        for k in 0..self.iterations {
            for i in 0..n {
                y[i] += d[i];
            }
            if k + 1 == self.iterations {
                break;
            }
            for i in 0..n {
                sd[i] = s[i] * d[i];
            }
            self.matrix.matvec(&sd, &mut asd);
            for i in 0..n {
                res[i] -= s[i] * asd[i];
            }
            let rho_next = 1.0 / (2.0 * sigma1 - rho);
            let c1 = rho_next * rho;
            let c2 = 2.0 * rho_next / delta;
            for i in 0..n {
                d[i] = c1 * d[i] + c2 * res[i];
            }
            rho = rho_next;
        }
        for i in 0..n {
            z[i] = s[i] * y[i];
        }
    }
}

/// Worst-case relative error of `k` Chebyshev steps on a spectrum with
/// condition number `kappa`: `2 sigma^k / (1 + sigma^{2k})`.
pub fn chebyshev_error_bound(kappa: f64, k: usize) -> f64 {
    let sk = kappa.sqrt();
    let sigma = (sk - 1.0) / (sk + 1.0);
    let sp = sigma.powi(k as i32);
    2.0 * sp / (1.0 + sp * sp)
}
