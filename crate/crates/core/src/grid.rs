//! Uniform 1D grids with homogeneous Dirichlet boundary, solution states,
//! potentials, and the discrete Laplacian.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tridiagonal::TridiagonalOperator;

/// Uniform grid on `[x_min, x_max]` with `num_points` nodes including both
/// boundary nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    num_points: usize,
    spacing: f64,
}

/// Builds a grid, rejecting degenerate intervals and grids without an
/// interior point.
pub fn make_grid(x_min: f64, x_max: f64, num_points: usize) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, num_points)
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, num_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "interval [{x_min}, {x_max}] is degenerate"
            )));
        }
        if num_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "num_points = {num_points}, need at least 3"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            num_points,
            spacing: (x_max - x_min) / (num_points - 1) as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_points).map(|i| self.point(i))
    }

    /// Grid with `factor` times as many intervals on the same domain.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor must be >= 1".into()));
        }
        Self::new(self.x_min, self.x_max, factor * (self.num_points - 1) + 1)
    }

    /// Samples `f` at every node and pins the two boundary values to zero.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut v: Vec<f64> = self.points().map(f).collect();
        pin_boundary(&mut v);
        v
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.num_points {
            return Err(Error::DimensionMismatch {
                expected: self.num_points,
                got: v.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn pin_boundary(v: &mut [f64]) {
    if let Some(first) = v.first_mut() {
        *first = 0.0;
    }
    if let Some(last) = v.last_mut() {
        *last = 0.0;
    }
}

/// A solution snapshot: nodal values (or a dense vector on the matrix
/// backend) at simulation time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub values: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    /// Samples `f` on `grid` at time `time`, with Dirichlet boundary values.
    pub fn sampled<F: Fn(f64) -> f64>(grid: &Grid1D, f: F, time: f64) -> Self {
        Self::new(grid.sample(f), time)
    }

    pub fn zeros(len: usize, time: f64) -> Self {
        Self::new(vec![0.0; len], time)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn spec_number(spec: &str, field: &str) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidParameter(format!("bad number `{field}` in `{spec}`"))),
    }
}

type Sampler2 = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A space-time potential `V(x, t)` with a human-readable tag.
#[derive(Clone)]
pub struct Potential {
    sampler: Arc<Sampler2>,
    label: String,
}

impl Potential {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            sampler: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_, _| c)
    }

    /// `V(x, t) = t - 500 x^2`, the potential of the reference experiment.
    pub fn quadratic_well() -> Self {
        Self::new("t-500x^2", |x, t| t - 500.0 * x * x)
    }

    /// `V(x, t) = a t - b x^2`.
    pub fn well(a: f64, b: f64) -> Self {
        Self::new(format!("{a}t-{b}x^2"), move |x, t| a * t - b * x * x)
    }

    /// Parses `zero`, `const:<c>`, `well:<a>:<b>` or `t-500x^2`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        match parts.as_slice() {
            ["zero"] | ["0"] => Ok(Self::zero()),
            ["t-500x^2"] | ["quadratic-well"] => Ok(Self::quadratic_well()),
            ["const", c] => Ok(Self::constant(spec_number(spec, c)?)),
            ["well", a, b] => Ok(Self::well(spec_number(spec, a)?, spec_number(spec, b)?)),
            _ => Err(Error::InvalidParameter(format!("unknown potential `{spec}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.sampler)(x, t)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("label", &self.label).finish()
    }
}

type Sampler1 = dyn Fn(f64) -> f64 + Send + Sync;

/// An initial profile `u0(x)`.
#[derive(Clone)]
pub struct InitialCondition {
    sampler: Arc<Sampler1>,
    label: String,
}

impl InitialCondition {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            sampler: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_| 0.0)
    }

    /// `exp(-width (x - center)^2)`.
    pub fn gaussian(center: f64, width: f64) -> Self {
        Self::new(format!("exp(-{width}(x-{center})^2)"), move |x| {
            (-width * (x - center).powi(2)).exp()
        })
    }

    pub fn sine(mode: u32) -> Self {
        Self::new(format!("sin({mode}pi x)"), move |x| {
            (mode as f64 * std::f64::consts::PI * x).sin()
        })
    }

    /// Parses `zero`, `gaussian:<center>:<width>` or `sine:<mode>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        match parts.as_slice() {
            ["zero"] | ["0"] => Ok(Self::zero()),
            ["gaussian", c, w] => Ok(Self::gaussian(spec_number(spec, c)?, spec_number(spec, w)?)),
            ["sine", k] => k
                .trim()
                .parse()
                .map(Self::sine)
                .map_err(|_| Error::InvalidParameter(format!("bad mode in `{spec}`"))),
            _ => Err(Error::InvalidParameter(format!("unknown initial condition `{spec}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.sampler)(x)
    }

    pub fn state(&self, grid: &Grid1D, time: f64) -> State {
        State::sampled(grid, |x| self.eval(x), time)
    }
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition")
            .field("label", &self.label)
            .finish()
    }
}

/// Discrete Dirichlet Laplacian: interior rows are the second difference
/// over `spacing^2`, boundary rows are zero so `L v` vanishes on the boundary
/// and `Id - c L` keeps exact identity rows there.
pub fn assemble_laplacian(grid: &Grid1D) -> TridiagonalOperator {
    let n = grid.num_points();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let mut sub = vec![inv; n - 1];
    let mut diag = vec![-2.0 * inv; n];
    let mut sup = vec![inv; n - 1];
    diag[0] = 0.0;
    diag[n - 1] = 0.0;
    sup[0] = 0.0;
    sub[n - 2] = 0.0;
    TridiagonalOperator { sub, diag, sup }
}

/// Closed-form eigenvalues of the interior block of the Dirichlet Laplacian,
/// `-(4 / spacing^2) sin^2(k pi h / 2L)` for `k = 1..I-2`, where `L` is the
/// domain length.
pub fn dirichlet_eigenvalues(grid: &Grid1D) -> Vec<f64> {
    let h = grid.spacing();
    let len = grid.x_max() - grid.x_min();
    (1..grid.num_points() - 1)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI * h / (2.0 * len)).sin();
            -4.0 / (h * h) * s * s
        })
        .collect()
}

/// `w[i] = V(point(i), t)` at every node, boundary included.
pub fn sample_potential(potential: &Potential, grid: &Grid1D, t: f64) -> Vec<f64> {
    grid.points().map(|x| potential.eval(x, t)).collect()
}
