//! Tridiagonal operators and their direct solvers.
//!
//! Row `i` of the operator reads
//! `sub[i-1] * v[i-1] + diag[i] * v[i] + sup[i] * v[i+1]`,
//! so `sub` and `sup` both have length `diag.len() - 1`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty tridiagonal operator".into()));
        }
        for len in [sub.len(), sup.len()] {
            if len != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: len,
                });
            }
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `alpha * Id + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        Self {
            sub: self.sub.iter().map(|&a| beta * a).collect(),
            diag: self.diag.iter().map(|&d| alpha + beta * d).collect(),
            sup: self.sup.iter().map(|&c| beta * c).collect(),
        }
    }

    /// Strict row diagonal dominance, the condition under which the Thomas
    /// sweep needs no pivoting.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 {
                off += self.sub[i - 1].abs();
            }
            if i + 1 < n {
                off += self.sup[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    /// Solves `self * x = rhs`. Uses the Thomas algorithm when the matrix is
    /// strictly diagonally dominant and Gaussian elimination with partial
    /// pivoting otherwise. `tau` is only used to label a singular-system error.
    pub fn solve(&self, rhs: &[f64], tau: f64) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.len(),
            });
        }
        if self.is_diagonally_dominant() {
            thomas(self, rhs, tau)
        } else {
            pivoting_solve(self, rhs, tau)
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.sup[i];
                m[(i + 1, i)] = self.sub[i];
            }
        }
        m
    }
}

fn singular(row: usize, tau: f64) -> Error {
    Error::SingularSystem { row, tau }
}

/// Thomas algorithm (no pivoting).
pub fn thomas(op: &TridiagonalOperator, rhs: &[f64], tau: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];

    let mut denom = op.diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(singular(0, tau));
    }
    if n > 1 {
        c_prime[0] = op.sup[0] / denom;
    }
    d_prime[0] = rhs[0] / denom;

    for i in 1..n {
        denom = op.diag[i] - op.sub[i - 1] * c_prime[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(singular(i, tau));
        }
        if i + 1 < n {
            c_prime[i] = op.sup[i] / denom;
        }
        d_prime[i] = (rhs[i] - op.sub[i - 1] * d_prime[i - 1]) / denom;
    }

    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting on the band, LAPACK `gtsv`
/// style: a row swap introduces one extra super-super-diagonal.
pub fn pivoting_solve(op: &TridiagonalOperator, rhs: &[f64], tau: f64) -> Result<Vec<f64>> {
    let n = op.dim();
    // Row i holds (dl, d, du, du2) around the diagonal after elimination.
    let mut dl: Vec<f64> = op.sub.clone();
    let mut d: Vec<f64> = op.diag.clone();
    let mut du: Vec<f64> = op.sup.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(singular(i, tau));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            // swap rows i and i+1
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= fact * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(singular(n - 1, tau));
    }

    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular(n - 1, tau));
    }
    Ok(x)
}
