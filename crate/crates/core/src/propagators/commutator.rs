//! Autonomous matrix test instances and the commutator bound
//! `|(AB - BA) v| <= c |(-A)^alpha v|`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A pair of constant generators `A`, `B` of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixInstance {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl MatrixInstance {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        for m in [&a, &b] {
            let (rows, cols) = m.shape();
            if rows != cols {
                return Err(Error::NotSquare { rows, cols });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("matrix instance entry".into()));
            }
        }
        if a.nrows() != b.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn commutator(&self) -> DMatrix<f64> {
        &self.a * &self.b - &self.b * &self.a
    }

    /// Whether `A` and `B` commute up to round-off relative to `|A| |B|`.
    pub fn commutes(&self) -> bool {
        let c = self.commutator().norm();
        c <= 1e-12 * (self.a.norm() * self.b.norm()).max(f64::MIN_POSITIVE)
    }

    /// Random instance: `A = -Q diag(lambda) Q^T` with `lambda` uniform in
    /// `[lambda_min, lambda_max]` and `Q` orthogonal, `B` Gaussian rescaled
    /// to spectral norm `b_norm`.
    pub fn random(
        rng: &mut impl Rng,
        dim: usize,
        lambda_min: f64,
        lambda_max: f64,
        b_norm: f64,
    ) -> Result<Self> {
        if dim == 0 || !(0.0 < lambda_min && lambda_min <= lambda_max) {
            return Err(Error::InvalidParameter(format!(
                "random instance needs dim >= 1 and 0 < lambda_min <= lambda_max, got dim = {dim}, [{lambda_min}, {lambda_max}]"
            )));
        }
        let g = gaussian_matrix(rng, dim);
        let q = g.qr().q();
        let lambdas = DVector::from_fn(dim, |_, _| rng.random_range(lambda_min..=lambda_max));
        let a = -(&q * DMatrix::from_diagonal(&lambdas) * q.transpose());
        let a = (&a + a.transpose()) * 0.5;
        let mut b = gaussian_matrix(rng, dim);
        let spectral = b.clone().svd(false, false).singular_values.max();
        if spectral > 0.0 {
            b *= b_norm / spectral;
        }
        Self::new(a, b)
    }

    /// Instance whose `B` is a polynomial in `A`, so the two commute.
    pub fn commuting(rng: &mut impl Rng, dim: usize) -> Result<Self> {
        let base = Self::random(rng, dim, 0.5, 10.0, 1.0)?;
        let a = base.a;
        let b = (&a * &a) * 0.01 + &a * 0.05 + DMatrix::identity(dim, dim) * 0.3;
        Self::new(a, b)
    }
}

pub fn gaussian_matrix(rng: &mut impl Rng, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vectors(seed: u64, dim: usize, count: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

/// `(-A)^alpha` for symmetric negative-definite `A`, through its
/// eigendecomposition.
pub fn fractional_power(a: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * a.amax().max(1.0) {
        return Err(Error::NotNegativeDefinite(format!(
            "asymmetry {asym:e} exceeds round-off"
        )));
    }
    let eig = a.clone().symmetric_eigen();
    if let Some(max) = eig.eigenvalues.iter().copied().reduce(f64::max) {
        if max >= 0.0 {
            return Err(Error::NotNegativeDefinite(format!(
                "largest eigenvalue {max:e} is not negative"
            )));
        }
    }
    let powered = eig.eigenvalues.map(|l| (-l).powf(alpha));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&powered) * eig.eigenvectors.transpose())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorReport {
    pub alpha: f64,
    /// Smallest `c` satisfying the bound on every test vector.
    pub best_c: f64,
    /// `max_v |[A,B] v| - c |(-A)^alpha v|` for the checked `c`; `<= 0`
    /// means the bound held everywhere.
    pub max_violation: f64,
    /// The constant the violation was measured against.
    pub checked_c: f64,
    pub num_vectors: usize,
}

impl CommutatorReport {
    pub fn holds(&self) -> bool {
        self.max_violation <= 0.0
    }
}

/// Measures the commutator bound on a set of test vectors. With
/// `candidate_c = None` the violation is measured against `best_c` itself.
pub fn commutator_bound_check(
    inst: &MatrixInstance,
    alpha: f64,
    vectors: &[DVector<f64>],
    candidate_c: Option<f64>,
) -> Result<CommutatorReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if vectors.is_empty() {
        return Err(Error::InsufficientData("no test vectors".into()));
    }
    let power = fractional_power(&inst.a, alpha)?;
    let comm = inst.commutator();
    let mut pairs = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.len() != inst.dim() {
            return Err(Error::DimensionMismatch {
                expected: inst.dim(),
                got: v.len(),
            });
        }
        pairs.push(((&comm * v).norm(), (&power * v).norm()));
    }
    let best_c = pairs
        .iter()
        .filter(|(_, rhs)| *rhs > 0.0)
        .map(|(lhs, rhs)| lhs / rhs)
        .fold(0.0, f64::max);
    let checked_c = candidate_c.unwrap_or(best_c);
    let max_violation = pairs
        .iter()
        .map(|(lhs, rhs)| lhs - checked_c * rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    // measured against its own best_c the bound holds by construction
    let max_violation = if candidate_c.is_none() {
        max_violation.min(0.0)
    } else {
        max_violation
    };
    Ok(CommutatorReport {
        alpha,
        best_c,
        max_violation,
        checked_c,
        num_vectors: vectors.len(),
    })
}
