//! Python bindings: grids, sub-steps, splitting runs, error sweeps, order
//! fits and the matrix rate check. States cross the boundary as lists of
//! floats; potentials and initial data as spec strings such as
//! `"t-500x^2"` or `"gaussian:0.4:50"`.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nasplit::analysis::{
    self, ErrorEntry, ErrorSeries, NormKind, OrderConvention, PdeProblem, ReferenceGrid,
};
use nasplit::cli::config::{parse_norm, parse_scheme};
use nasplit::propagators::{self, MatrixInstance};
use nasplit::splitting::{self, DiffusionSubstep, Storage, SubflowOrder, TimeSpan};
use nasplit::{Error, Grid1D, InitialCondition, Potential, State};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Overflow { .. } | Error::NonFinite(_) | Error::ToleranceNotMet { .. } | Error::SingularSystem { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::Step { ref source, .. } if matches!(**source, Error::Overflow { .. } | Error::NonFinite(_)) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn potential(spec: &str) -> PyResult<Potential> {
    Potential::from_spec(spec).map_err(to_py)
}

fn initial(spec: &str) -> PyResult<InitialCondition> {
    InitialCondition::from_spec(spec).map_err(to_py)
}

fn norm(kind: &str) -> PyResult<NormKind> {
    parse_norm(kind).map_err(PyValueError::new_err)
}

fn diffusion(kind: &str) -> PyResult<DiffusionSubstep> {
    match kind {
        "cn" => Ok(DiffusionSubstep::CrankNicolson),
        "exact" => Ok(DiffusionSubstep::Exact),
        _ => Err(PyValueError::new_err(format!("diffusion must be `cn` or `exact`, got `{kind}`"))),
    }
}

/// Uniform grid on `[x_min, x_max]` with homogeneous Dirichlet boundary.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Grid1D,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x_min: f64, x_max: f64, num_points: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Grid1D::new(x_min, x_max, num_points).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_points(&self) -> usize {
        self.inner.num_points()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points().collect()
    }

    /// Initial data from a spec string, zero on the boundary.
    fn initial(&self, spec: &str) -> PyResult<Vec<f64>> {
        Ok(initial(spec)?.state(&self.inner, 0.0).values)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid({}, {}, {})",
            self.inner.x_min(),
            self.inner.x_max(),
            self.inner.num_points()
        )
    }
}

/// Nested coarse grid with sampling restriction and linear interpolation.
#[pyclass(name = "ProjectionPair", frozen)]
struct PyProjectionPair {
    inner: nasplit::approximation::ProjectionPair,
}

#[pymethods]
impl PyProjectionPair {
    #[new]
    fn new(fine: &PyGrid, coarse_points: usize) -> PyResult<Self> {
        Ok(Self {
            inner: nasplit::approximation::make_injection_pair(&fine.inner, coarse_points).map_err(to_py)?,
        })
    }

    #[getter]
    fn stride(&self) -> usize {
        self.inner.stride()
    }

    fn restrict(&self, fine: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.restrict(&fine).map_err(to_py)
    }

    fn interpolate(&self, coarse: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.interpolate(&coarse).map_err(to_py)
    }
}

#[pyfunction]
fn cn_diffusion_step(grid: &PyGrid, u: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
    Ok(propagators::cn_diffusion_step(&State::new(u, 0.0), &grid.inner, tau)
        .map_err(to_py)?
        .values)
}

#[pyfunction]
fn cn_reference_step(grid: &PyGrid, u: Vec<f64>, potential_spec: &str, t: f64, tau: f64) -> PyResult<Vec<f64>> {
    let v = potential(potential_spec)?;
    Ok(propagators::cn_reference_step(&State::new(u, t), &grid.inner, &v, t, tau)
        .map_err(to_py)?
        .values)
}

#[pyfunction]
fn potential_step_exact(grid: &PyGrid, u: Vec<f64>, potential_spec: &str, t_freeze: f64, tau: f64) -> PyResult<Vec<f64>> {
    let v = potential(potential_spec)?;
    Ok(propagators::potential_step_exact(&State::new(u, t_freeze), &grid.inner, &v, t_freeze, tau)
        .map_err(to_py)?
        .values)
}

/// Splitting run; returns the final state, or every step with `full=True`.
#[pyfunction]
#[pyo3(signature = (grid, potential_spec, u0, t0, t_end, n, scheme="sequential", diffusion_kind="cn", full=false))]
#[allow(clippy::too_many_arguments)]
fn run_split(
    grid: &PyGrid,
    potential_spec: &str,
    u0: Vec<f64>,
    t0: f64,
    t_end: f64,
    n: usize,
    scheme: &str,
    diffusion_kind: &str,
    full: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let v = potential(potential_spec)?;
    let scheme = parse_scheme(scheme).map_err(PyValueError::new_err)?;
    let span = TimeSpan::new(t0, t_end, n).map_err(to_py)?;
    let storage = if full { Storage::Full } else { Storage::Endpoints };
    let run = splitting::run_pde_split(
        &grid.inner,
        &v,
        scheme,
        SubflowOrder::DiffusionFirst,
        diffusion(diffusion_kind)?,
        &span,
        &State::new(u0, t0),
        storage,
    )
    .map_err(to_py)?;
    Ok(trajectory(run, full))
}

/// Unsplit Crank–Nicolson run.
#[pyfunction]
#[pyo3(signature = (grid, potential_spec, u0, t0, t_end, n, full=false))]
fn run_reference(
    grid: &PyGrid,
    potential_spec: &str,
    u0: Vec<f64>,
    t0: f64,
    t_end: f64,
    n: usize,
    full: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let v = potential(potential_spec)?;
    let span = TimeSpan::new(t0, t_end, n).map_err(to_py)?;
    let storage = if full { Storage::Full } else { Storage::Endpoints };
    let run = splitting::run_reference(&grid.inner, &v, &State::new(u0, t0), &span, storage).map_err(to_py)?;
    Ok(trajectory(run, full))
}

fn trajectory(run: splitting::SplitRun, full: bool) -> Vec<Vec<f64>> {
    if full {
        run.trajectory.into_iter().map(|s| s.values).collect()
    } else {
        vec![run.into_final().values]
    }
}

#[pyfunction]
#[pyo3(signature = (u, v, spacing=1.0, kind="l2"))]
fn error_norm(u: Vec<f64>, v: Vec<f64>, spacing: f64, kind: &str) -> PyResult<f64> {
    analysis::error_norm(&u, &v, spacing, norm(kind)?).map_err(to_py)
}

/// `(tau, error, rel_error)` per step size for one sequential step against
/// one unsplit Crank–Nicolson step.
#[pyfunction]
#[pyo3(signature = (grid, potential_spec, initial_spec, taus, kind="l2", ref_refine=1))]
fn local_error_sweep(
    grid: &PyGrid,
    potential_spec: &str,
    initial_spec: &str,
    taus: Vec<f64>,
    kind: &str,
    ref_refine: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let problem = PdeProblem {
        grid: grid.inner,
        potential: potential(potential_spec)?,
        initial: initial(initial_spec)?,
        t0: 0.0,
    };
    let reference = match ref_refine {
        0 => return Err(PyValueError::new_err("ref_refine must be at least 1")),
        1 => ReferenceGrid::SameGrid,
        k => ReferenceGrid::Refined(k),
    };
    let series = analysis::local_error_sweep(&problem, &taus, norm(kind)?, reference).map_err(to_py)?;
    Ok(series.entries().iter().map(|e| (e.tau, e.error, e.rel_error)).collect())
}

fn fit_dict<'py>(py: Python<'py>, fit: &analysis::OrderFit) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("slope", fit.slope_a)?;
    d.set_item("intercept", fit.intercept_b)?;
    d.set_item("intercept_log10", fit.intercept_log10())?;
    d.set_item("order", fit.estimated_order_p)?;
    d.set_item("residual", fit.residual)?;
    d.set_item("points_used", fit.points_used)?;
    d.set_item("excluded", fit.excluded)?;
    Ok(d)
}

/// Least-squares fit of `ln(error)` against `ln(tau)`.
#[pyfunction]
#[pyo3(signature = (taus, errors, convention="local"))]
fn fit_order<'py>(py: Python<'py>, taus: Vec<f64>, errors: Vec<f64>, convention: &str) -> PyResult<Bound<'py, PyDict>> {
    if taus.len() != errors.len() {
        return Err(PyValueError::new_err("taus and errors differ in length"));
    }
    let convention = match convention {
        "local" => OrderConvention::Local,
        "global" => OrderConvention::Global,
        _ => return Err(PyValueError::new_err("convention must be `local` or `global`")),
    };
    let entries = taus
        .iter()
        .zip(&errors)
        .map(|(&tau, &error)| ErrorEntry {
            tau,
            error,
            rel_error: error,
        })
        .collect();
    let series = ErrorSeries::new(entries, NormKind::DiscreteL2).map_err(to_py)?;
    fit_dict(py, &analysis::fit_order(&series, convention).map_err(to_py)?)
}

/// Sequential and Strang errors on a seeded random instance with
/// `A` symmetric negative-definite and `|B| = 1`.
#[pyfunction]
#[pyo3(signature = (dim, seed, alpha=0.5, t=1.0, ns=vec![8, 16, 32, 64, 128], commuting=false))]
fn jl_rate_check<'py>(
    py: Python<'py>,
    dim: usize,
    seed: u64,
    alpha: f64,
    t: f64,
    ns: Vec<usize>,
    commuting: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = if commuting {
        MatrixInstance::commuting(&mut rng, dim)
    } else {
        MatrixInstance::random(&mut rng, dim, 0.5, 10.0, 1.0)
    }
    .map_err(to_py)?;
    let r = analysis::jl_rate_check(&inst, alpha, t, &ns, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ns", r.ns)?;
    d.set_item("sequential_errors", r.sequential_errors)?;
    d.set_item("strang_errors", r.strang_errors)?;
    d.set_item("exact", r.verdict == analysis::RateVerdict::Exact)?;
    match (&r.sequential, &r.strang) {
        (Some(s), Some(g)) => {
            d.set_item("sequential", fit_dict(py, s)?)?;
            d.set_item("strang", fit_dict(py, g)?)?;
        }
        _ => {
            d.set_item("sequential", py.None())?;
            d.set_item("strang", py.None())?;
        }
    }
    d.set_item("commutator_best_c", r.commutator.best_c)?;
    d.set_item("commutator_bound_holds", r.commutator.holds())?;
    Ok(d)
}

/// Matrix exponential of a square matrix given as a list of rows.
#[pyfunction]
fn matrix_expm(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let e = propagators::matrix_expm(&m).map_err(to_py)?;
    Ok((0..n).map(|i| e.row(i).iter().copied().collect()).collect())
}

#[pymodule]
#[pyo3(name = "nasplit")]
fn nasplit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyProjectionPair>()?;
    m.add_function(wrap_pyfunction!(cn_diffusion_step, m)?)?;
    m.add_function(wrap_pyfunction!(cn_reference_step, m)?)?;
    m.add_function(wrap_pyfunction!(potential_step_exact, m)?)?;
    m.add_function(wrap_pyfunction!(run_split, m)?)?;
    m.add_function(wrap_pyfunction!(run_reference, m)?)?;
    m.add_function(wrap_pyfunction!(error_norm, m)?)?;
    m.add_function(wrap_pyfunction!(local_error_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_order, m)?)?;
    m.add_function(wrap_pyfunction!(jl_rate_check, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_expm, m)?)?;
    Ok(())
}
