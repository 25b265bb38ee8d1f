//! High-accuracy evolution families `U(t, s)` of `x' = A(t) x` on small dense
//! systems, used as ground truth for splitting errors.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

type Sampler = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

/// A time-dependent square matrix `t -> A(t)`.
#[derive(Clone)]
pub struct MatrixGenerator {
    dim: usize,
    sampler: Arc<Sampler>,
    autonomous: bool,
}

impl MatrixGenerator {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            sampler: Arc::new(f),
            autonomous: false,
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        Ok(Self {
            dim: rows,
            sampler: Arc::new(move |_| m.clone()),
            autonomous: true,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            sampler: Arc::new(move |_| DMatrix::zeros(dim, dim)),
            autonomous: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when built by [`MatrixGenerator::constant`] or
    /// [`MatrixGenerator::zero`].
    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        (self.sampler)(t)
    }

    /// `t -> A(t) + B(t)`.
    pub fn sum(&self, other: &MatrixGenerator) -> Result<MatrixGenerator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.sampler.clone(), other.sampler.clone());
        Ok(Self {
            dim: self.dim,
            sampler: Arc::new(move |t| a(t) + b(t)),
            autonomous: self.autonomous && other.autonomous,
        })
    }

    /// `t -> A(t * factor)`; `factor = 0.5` gives the family `A(./2)`.
    pub fn time_scaled(&self, factor: f64) -> MatrixGenerator {
        let a = self.sampler.clone();
        Self {
            dim: self.dim,
            sampler: Arc::new(move |t| a(t * factor)),
            autonomous: self.autonomous,
        }
    }
}

impl fmt::Debug for MatrixGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixGenerator")
            .field("dim", &self.dim)
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Target accuracy, relative to `max(1, |U|)` in the max-entry norm.
    pub tol: f64,
    /// Upper bound on RK4 steps over one interval.
    pub max_steps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_steps: 1 << 20,
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn rk4_propagator(gen: &MatrixGenerator, s: f64, t: f64, steps: usize) -> DMatrix<f64> {
    let n = gen.dim();
    let h = (t - s) / steps as f64;
    let mut y = DMatrix::<f64>::identity(n, n);
    let mut a_left = gen.at(s);
    for k in 0..steps {
        let t0 = s + k as f64 * h;
        let t1 = if k + 1 == steps { t } else { s + (k + 1) as f64 * h };
        let a_mid = gen.at(t0 + 0.5 * h);
        let a_right = gen.at(t1);
        let k1 = &a_left * &y;
        let k2 = &a_mid * (&y + &k1 * (0.5 * h));
        let k3 = &a_mid * (&y + &k2 * (0.5 * h));
        let k4 = &a_right * (&y + &k3 * h);
        y += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        a_left = a_right;
    }
    y
}

/// Evolution family `U(t, s)` of `x' = A(r) x`, `s <= t`, by classical RK4
/// with step doubling until the Richardson error estimate is below
/// `opts.tol`. Returns the extrapolated propagator.
pub fn oracle_evolution(
    gen: &MatrixGenerator,
    s: f64,
    t: f64,
    opts: OracleOptions,
) -> Result<DMatrix<f64>> {
    if !(s <= t) {
        return Err(Error::InvalidParameter(format!(
            "oracle interval must satisfy s <= t, got s = {s}, t = {t}"
        )));
    }
    let n = gen.dim();
    if t == s {
        return Ok(DMatrix::identity(n, n));
    }
    let scale = max_abs(&gen.at(s)).max(max_abs(&gen.at(t))) * n as f64;
    let mut steps = (((t - s) * scale / 0.5).ceil() as usize).clamp(2, opts.max_steps);
    let mut coarse = rk4_propagator(gen, s, t, steps);
    let mut estimate = f64::INFINITY;
    while 2 * steps <= opts.max_steps {
        steps *= 2;
        let fine = rk4_propagator(gen, s, t, steps);
        let diff = &fine - &coarse;
        estimate = max_abs(&diff) / 15.0 / max_abs(&fine).max(1.0);
        if estimate <= opts.tol {
            return Ok(fine + diff / 15.0);
        }
        coarse = fine;
    }
    Err(Error::ToleranceNotMet {
        from: s,
        to: t,
        tol: opts.tol,
        estimate,
        max_steps: opts.max_steps,
    })
}

/// `U(t, s) x` via [`oracle_evolution`].
pub fn oracle_apply(
    gen: &MatrixGenerator,
    x: &[f64],
    s: f64,
    t: f64,
    opts: OracleOptions,
) -> Result<Vec<f64>> {
    if x.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            got: x.len(),
        });
    }
    let u = oracle_evolution(gen, s, t, opts)?;
    Ok((u * DVector::from_column_slice(x)).as_slice().to_vec())
}
