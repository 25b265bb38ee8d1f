//! Error norms, convergence-order fits, local-error and spatial sweeps,
//! positivity checks and the matrix rate check for the sequential splitting.

use log::warn;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::approximation::{make_injection_pair, run_approx_split};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, InitialCondition, Potential, State};
use crate::propagators::{
    commutator_bound_check, cn_reference_step, gaussian_vectors, matrix_expm, CommutatorReport,
    MatrixGenerator, MatrixInstance,
};
use crate::splitting::{
    run_frozen_sequential, run_frozen_strang, run_pde_sequential, run_pde_split, run_reference,
    DiffusionSubstep, MatrixExpFlow, SplitRun, SplitScheme, Storage, SubflowOrder, TimeSpan,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormKind {
    /// `sqrt(spacing * sum (u_i - v_i)^2)`.
    #[default]
    DiscreteL2,
    Max,
}

/// Distance of two vectors. `spacing` weights the discrete L2 norm; pass
/// `1.0` for the Euclidean norm.
pub fn error_norm(u: &[f64], v: &[f64], spacing: f64, kind: NormKind) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let diffs = u.iter().zip(v).map(|(a, b)| a - b);
    Ok(match kind {
        NormKind::DiscreteL2 => (spacing * diffs.map(|d| d * d).sum::<f64>()).sqrt(),
        NormKind::Max => diffs.fold(0.0, |m, d| m.max(d.abs())),
    })
}

/// Norm of a single vector, as [`error_norm`] against zero.
pub fn vector_norm(u: &[f64], spacing: f64, kind: NormKind) -> f64 {
    match kind {
        NormKind::DiscreteL2 => (spacing * u.iter().map(|d| d * d).sum::<f64>()).sqrt(),
        NormKind::Max => u.iter().fold(0.0, |m, d| m.max(d.abs())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEntry {
    pub tau: f64,
    pub error: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSeries {
    entries: Vec<ErrorEntry>,
    norm_kind: NormKind,
}

impl ErrorSeries {
    /// Validates positive, strictly monotone step sizes and nonnegative errors.
    pub fn new(entries: Vec<ErrorEntry>, norm_kind: NormKind) -> Result<Self> {
        for e in &entries {
            if !(e.tau > 0.0 && e.tau.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size must be positive, got {}", e.tau)));
            }
            if !(e.error >= 0.0 && e.rel_error >= 0.0) {
                return Err(Error::NonFinite(format!("error entry at tau = {}", e.tau)));
            }
        }
        let inc = entries.windows(2).all(|w| w[0].tau < w[1].tau);
        let dec = entries.windows(2).all(|w| w[0].tau > w[1].tau);
        if !(inc || dec) {
            return Err(Error::InvalidParameter(
                "step sizes must be strictly monotone".into(),
            ));
        }
        Ok(Self { entries, norm_kind })
    }

    pub fn entries(&self) -> &[ErrorEntry] {
        &self.entries
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm_kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrderConvention {
    /// One-step errors: order = slope - 1.
    #[default]
    Local,
    /// Errors at a fixed final time: order = slope.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub slope_a: f64,
    /// Intercept of the fit in natural logarithms.
    pub intercept_b: f64,
    pub estimated_order_p: f64,
    /// Root mean square of the fit residuals.
    pub residual: f64,
    pub convention: OrderConvention,
    pub points_used: usize,
    /// Entries skipped because their error was exactly zero.
    pub excluded: usize,
}

impl OrderFit {
    /// The intercept for base-10 logarithms of the errors and step sizes.
    pub fn intercept_log10(&self) -> f64 {
        self.intercept_b / std::f64::consts::LN_10
    }
}

/// Least-squares line `ln(rel_error) = a ln(tau) + b` over the series.
pub fn fit_order(series: &ErrorSeries, convention: OrderConvention) -> Result<OrderFit> {
    let points: Vec<(f64, f64)> = series
        .entries
        .iter()
        .filter(|e| e.rel_error > 0.0)
        .map(|e| (e.tau.ln(), e.rel_error.ln()))
        .collect();
    let excluded = series.len() - points.len();
    if excluded > 0 {
        warn!("{excluded} zero-error entries excluded from the order fit");
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "order fit needs at least 4 entries with positive error, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let residual = (points.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    Ok(OrderFit {
        slope_a: a,
        intercept_b: b,
        estimated_order_p: match convention {
            OrderConvention::Local => a - 1.0,
            OrderConvention::Global => a,
        },
        residual,
        convention,
        points_used: points.len(),
        excluded,
    })
}

/// A reaction-diffusion problem `u_t = u_xx + V(x, t) u` on a grid.
#[derive(Clone, Debug)]
pub struct PdeProblem {
    pub grid: Grid1D,
    pub potential: Potential,
    pub initial: InitialCondition,
    pub t0: f64,
}

impl PdeProblem {
    /// Potential `t - 500 x^2`, initial data `exp(-50 (x - 0.4)^2)` on
    /// `[0, 1]` with `num_points` nodes.
    pub fn quadratic_well(num_points: usize) -> Result<Self> {
        Ok(Self {
            grid: Grid1D::new(0.0, 1.0, num_points)?,
            potential: Potential::quadratic_well(),
            initial: InitialCondition::gaussian(0.4, 50.0),
            t0: 0.0,
        })
    }

    pub fn initial_state(&self) -> State {
        self.initial.state(&self.grid, self.t0)
    }
}

/// How the unsplit reference for a local-error sweep is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReferenceGrid {
    #[default]
    SameGrid,
    /// A grid with `k` times as many intervals, sampled back at the
    /// problem's nodes.
    Refined(usize),
}

/// One sequential splitting macro step against one unsplit Crank–Nicolson
/// step from the same initial data, for every `tau`.
pub fn local_error_sweep(
    problem: &PdeProblem,
    taus: &[f64],
    norm_kind: NormKind,
    reference: ReferenceGrid,
) -> Result<ErrorSeries> {
    let u0 = problem.initial_state();
    let ref_grid = match reference {
        ReferenceGrid::SameGrid => problem.grid,
        ReferenceGrid::Refined(k) => problem.grid.refined(k)?,
    };
    let pair = make_injection_pair(&ref_grid, problem.grid.num_points())?;
    let ref_u0 = problem.initial.state(&ref_grid, problem.t0);
    let h = problem.grid.spacing();
    let entries = taus
        .par_iter()
        .map(|&tau| {
            let span = TimeSpan::new(problem.t0, problem.t0 + tau, 1)?;
            let split = run_pde_sequential(&problem.grid, &problem.potential, &u0, &span, Storage::Endpoints)?;
            let fine = cn_reference_step(&ref_u0, &ref_grid, &problem.potential, problem.t0, tau)?;
            let reference = pair.restrict(&fine.values)?;
            let error = error_norm(&reference, &split.final_state().values, h, norm_kind)?;
            let scale = vector_norm(&reference, h, norm_kind);
            Ok(ErrorEntry {
                tau,
                error,
                rel_error: if scale > 0.0 { error / scale } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ErrorSeries::new(entries, norm_kind)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    pub min_value: f64,
    /// Index into the trajectory where the minimum occurs.
    pub at_snapshot: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Minimum over every stored state of a run; passes iff `>= -tol`.
pub fn check_positivity(run: &SplitRun, tol: f64) -> PositivityReport {
    let (at_snapshot, min_value) = run
        .trajectory
        .iter()
        .map(State::min_value)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, m)| if m < best.1 { (i, m) } else { best });
    PositivityReport {
        min_value,
        at_snapshot,
        tol,
        passed: min_value >= -tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdePositivity {
    pub report: PositivityReport,
    pub diffusion: DiffusionSubstep,
    /// A failure of a Crank–Nicolson run: the sub-step undershoots, the
    /// exact flows do not.
    pub discretization_artifact: bool,
}

/// Runs the sequential splitting with full storage and checks positivity.
pub fn pde_positivity(
    problem: &PdeProblem,
    span: &TimeSpan,
    diffusion: DiffusionSubstep,
    tol: f64,
) -> Result<PdePositivity> {
    let u0 = problem.initial_state();
    if u0.min_value() < 0.0 {
        return Err(Error::InvalidParameter("initial data must be nonnegative".into()));
    }
    let run = run_pde_split(
        &problem.grid,
        &problem.potential,
        SplitScheme::sequential(),
        SubflowOrder::DiffusionFirst,
        diffusion,
        span,
        &u0,
        Storage::Full,
    )?;
    let report = check_positivity(&run, tol);
    Ok(PdePositivity {
        report,
        diffusion,
        discretization_artifact: !report.passed && diffusion == DiffusionSubstep::CrankNicolson,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateVerdict {
    /// The generators commute or every error is at round-off; no fit.
    Exact,
    Fitted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub ns: Vec<usize>,
    pub sequential_errors: Vec<f64>,
    pub strang_errors: Vec<f64>,
    pub sequential: Option<OrderFit>,
    pub strang: Option<OrderFit>,
    pub commutator: CommutatorReport,
    pub verdict: RateVerdict,
}

/// Relative errors of `n` sequential and Strang steps of size `t / n`
/// against `e^{t(A+B)} v` for a seeded unit vector `v`, with global order
/// fits and the commutator report for `alpha`.
pub fn jl_rate_check(
    inst: &MatrixInstance,
    alpha: f64,
    t: f64,
    ns: &[usize],
    seed: u64,
) -> Result<RateReport> {
    if !(t > 0.0) || ns.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter(format!(
            "rate check needs t > 0 and n >= 1, got t = {t}"
        )));
    }
    let dim = inst.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    let v = &v / v.norm();
    let exact: DVector<f64> = matrix_expm(&((&inst.a + &inst.b) * t))? * &v;
    let scale = exact.norm().max(f64::MIN_POSITIVE);
    let flow_a = MatrixExpFlow::new(MatrixGenerator::constant(inst.a.clone())?);
    let flow_b = MatrixExpFlow::new(MatrixGenerator::constant(inst.b.clone())?);
    let x = State::new(v.as_slice().to_vec(), 0.0);
    let mut sequential_errors = Vec::with_capacity(ns.len());
    let mut strang_errors = Vec::with_capacity(ns.len());
    for &n in ns {
        let span = TimeSpan::new(0.0, t, n)?;
        let seq = run_frozen_sequential(&flow_a, &flow_b, &span, &x, Storage::Endpoints)?;
        let str_ = run_frozen_strang(&flow_a, &flow_b, &span, &x, Storage::Endpoints)?;
        sequential_errors.push(error_norm(&seq.final_state().values, exact.as_slice(), 1.0, NormKind::DiscreteL2)? / scale);
        strang_errors.push(error_norm(&str_.final_state().values, exact.as_slice(), 1.0, NormKind::DiscreteL2)? / scale);
    }
    let commutator = commutator_bound_check(inst, alpha, &gaussian_vectors(seed ^ 0x5eed, dim, 64), None)?;
    let round_off = 1e-12;
    let exact_case = inst.commutes()
        || sequential_errors
            .iter()
            .chain(&strang_errors)
            .all(|&e| e <= round_off);
    let fit = |errs: &[f64]| -> Result<OrderFit> {
        let entries = ns
            .iter()
            .zip(errs)
            .map(|(&n, &e)| ErrorEntry {
                tau: t / n as f64,
                error: e,
                rel_error: e,
            })
            .collect();
        fit_order(&ErrorSeries::new(entries, NormKind::DiscreteL2)?, OrderConvention::Global)
    };
    let (sequential, strang, verdict) = if exact_case {
        (None, None, RateVerdict::Exact)
    } else {
        (Some(fit(&sequential_errors)?), Some(fit(&strang_errors)?), RateVerdict::Fitted)
    };
    Ok(RateReport {
        ns: ns.to_vec(),
        sequential_errors,
        strang_errors,
        sequential,
        strang,
        commutator,
        verdict,
    })
}

/// Errors of the coarse-grid splitting on an `(m, n)` table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub ms: Vec<usize>,
    pub ns: Vec<usize>,
    /// `errors[i][j]` for `ms[i]`, `ns[j]`, against the unsplit fine-grid
    /// reference.
    pub errors: Vec<Vec<f64>>,
    /// Errors at the largest `n` against the fine-grid splitting with the
    /// same `n`, isolating the spatial part.
    pub spatial_errors: Vec<f64>,
    /// Log-log slope of `spatial_errors` against the coarse spacing, over
    /// the coarse sizes strictly below the fine grid.
    pub spatial_slope: Option<f64>,
}

/// Runs `J_m (coarse sequential splitting) P_m` for every `(m, n)` on
/// `[t0, t_end]` and compares with the unsplit Crank–Nicolson solution on
/// the fine grid with `ref_factor * max(ns)` steps.
pub fn approximation_sweep(
    problem: &PdeProblem,
    ms: &[usize],
    ns: &[usize],
    t_end: f64,
    ref_factor: usize,
    norm_kind: NormKind,
) -> Result<SweepTable> {
    if ms.is_empty() || ns.is_empty() || ref_factor == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs coarse sizes, step counts and a positive reference factor".into(),
        ));
    }
    let grid = problem.grid;
    let h = grid.spacing();
    let u0 = problem.initial_state();
    let n_max = *ns.iter().max().expect("ns is non-empty");
    let ref_span = TimeSpan::new(problem.t0, t_end, ref_factor * n_max)?;
    let reference = run_reference(&grid, &problem.potential, &u0, &ref_span, Storage::Endpoints)?.into_final();
    let pairs = ms
        .iter()
        .map(|&m| make_injection_pair(&grid, m))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..ms.len()).flat_map(|i| (0..ns.len()).map(move |j| (i, j))).collect();
    let results = cells
        .par_iter()
        .map(|&(i, j)| {
            let span = TimeSpan::new(problem.t0, t_end, ns[j])?;
            let out = run_approx_split(&pairs[i], &problem.potential, &u0, &span)?;
            Ok(out.values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut errors = vec![vec![0.0; ns.len()]; ms.len()];
    for (&(i, j), values) in cells.iter().zip(&results) {
        errors[i][j] = error_norm(&values, &reference.values, h, norm_kind)?;
    }
    let j_max = ns.iter().position(|&n| n == n_max).expect("n_max is in ns");
    let fine_split = run_pde_sequential(&grid, &problem.potential, &u0, &TimeSpan::new(problem.t0, t_end, n_max)?, Storage::Endpoints)?;
    let spatial_errors = (0..ms.len())
        .map(|i| error_norm(&results[i * ns.len() + j_max], &fine_split.final_state().values, h, norm_kind))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .zip(&spatial_errors)
        .filter(|(p, &e)| p.stride() > 1 && e > 0.0)
        .map(|(p, &e)| (p.coarse().spacing().ln(), e.ln()))
        .collect();
    let spatial_slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
    });
    Ok(SweepTable {
        ms: ms.to_vec(),
        ns: ns.to_vec(),
        errors,
        spatial_errors,
        spatial_slope,
    })
}
