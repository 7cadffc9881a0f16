use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

/// Dense Cholesky factorization `A = L L^T`.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Factors a row-major `n x n` symmetric positive definite matrix.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        check_len(n * n, a.len(), "dense matrix")?;
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::Singular(format!(
                    "Cholesky pivot {j} is {d}; matrix is not positive definite"
                )));
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                a[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l: a })
    }

    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        let n = m.nrows();
        let dense: Vec<f64> = m.to_dense().into_iter().flatten().collect();
        Self::factor(n, dense)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Cholesky factorization of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    kd: usize,
    // Row i stores L(i, i - kd ..= i) at offsets 0..=kd.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        let n = m.nrows();
        check_len(n, m.ncols(), "banded Cholesky needs a square matrix")?;
        let p = m.pattern();
        let mut kd = 0;
        for i in 0..n {
            for nz in p.row_ptr()[i]..p.row_ptr()[i + 1] {
                let j = p.col_idx()[nz];
                if j < i {
                    kd = kd.max(i - j);
                }
            }
        }
        let w = kd + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for nz in p.row_ptr()[i]..p.row_ptr()[i + 1] {
                let j = p.col_idx()[nz];
                if j <= i {
                    band[i * w + (j + kd - i)] += m.values()[nz];
                }
            }
        }
        for j in 0..n {
            let lo = j.saturating_sub(kd);
            let mut d = band[j * w + kd];
            for k in lo..j {
                let l = band[j * w + (k + kd - j)];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::Singular(format!("banded Cholesky pivot {j} is {d}")));
            }
            let d = d.sqrt();
            band[j * w + kd] = d;
            for i in j + 1..(j + kd + 1).min(n) {
                let lo_i = i.saturating_sub(kd);
                let mut s = band[i * w + (j + kd - i)];
                for k in lo_i.max(lo)..j {
                    s -= band[i * w + (k + kd - i)] * band[j * w + (k + kd - j)];
                }
                band[i * w + (j + kd - i)] = s / d;
            }
        }
        Ok(Self { n, kd, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kd) = (self.n, self.kd);
        let w = kd + 1;
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(kd)..i {
                s -= self.band[i * w + (k + kd - i)] * b[k];
            }
            b[i] = s / self.band[i * w + kd];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + kd + 1).min(n) {
                s -= self.band[k * w + (i + kd - k)] * b[k];
            }
            b[i] = s / self.band[i * w + kd];
        }
    }
}

/// LU factorization with partial pivoting of a general band matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    // Upper factor: row i holds columns i - kl ..= i + ku + kl.
    width: usize,
    upper: Vec<f64>,
    // Multipliers of elimination step k for rows k+1 ..= k+kl.
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        let n = m.nrows();
        check_len(n, m.ncols(), "banded LU needs a square matrix")?;
        let p = m.pattern();
        let (mut kl, mut ku) = (0, 0);
        for i in 0..n {
            for nz in p.row_ptr()[i]..p.row_ptr()[i + 1] {
                let j = p.col_idx()[nz];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut upper = vec![0.0; n * width];
        for i in 0..n {
            for nz in p.row_ptr()[i]..p.row_ptr()[i + 1] {
                let j = p.col_idx()[nz];
                upper[i * width + (j + kl - i)] += m.values()[nz];
            }
        }
        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        let reach = ku + kl;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = upper[idx(k, k)].abs();
            for i in k + 1..=last {
                let v = upper[idx(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > 0.0) {
                return Err(Error::Singular(format!("zero pivot in banded LU at column {k}")));
            }
            pivots[k] = piv;
            let jmax = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    upper.swap(idx(k, j), idx(piv, j));
                }
            }
            let pivot = upper[idx(k, k)];
            for i in k + 1..=last {
                let l = upper[idx(i, k)] / pivot;
                lower[k * kl + (i - k - 1)] = l;
                upper[idx(i, k)] = 0.0;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        upper[idx(i, j)] -= l * upper[idx(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            upper,
            lower,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, width) = (self.n, self.kl, self.width);
        let ku_kl = width - 1 - kl;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + ku_kl).min(n - 1) {
                s -= self.upper[i * width + (j + kl - i)] * b[j];
            }
            b[i] = s / self.upper[i * width + kl];
        }
    }
}
