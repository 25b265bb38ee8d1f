//! Composition engines: sequential (Lie–Trotter), Strang and weighted
//! splittings with coefficients frozen at each macro step's left endpoint,
//! plus the subflow and time-rescaled subflow sequential splittings.
//!
//! A macro step of length `tau = (t - s) / n` starting at `s + p tau` applies
//!
//! | scheme     | map                                                       |
//! |------------|-----------------------------------------------------------|
//! | sequential | `e^{tau B(r)} e^{tau A(r)}`                               |
//! | Strang     | `e^{tau/2 A(r)} e^{tau B(r)} e^{tau/2 A(r)}`              |
//! | weighted   | `theta e^{tau B(r)} e^{tau A(r)} + (1-theta) e^{tau A(r)} e^{tau B(r)}` |
//!
//! with `r = s + p tau`. Operators on the right act first.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Potential, State};
use crate::propagators::{
    cn_diffusion_step, matrix_expm, oracle_apply, potential_step_exact, ExactDiffusion,
    MatrixGenerator, OracleOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitKind {
    Sequential,
    Strang,
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    FrozenCoefficient,
    Subflow,
    RescaledSubflow,
}

/// Which composition to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitScheme {
    pub kind: SplitKind,
    /// Weight of the `B after A` ordering; only read by `Weighted`.
    pub theta: f64,
    pub mode: SplitMode,
}

impl SplitScheme {
    pub fn new(kind: SplitKind, theta: f64, mode: SplitMode) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie strictly inside (0, 1), got {theta}"
            )));
        }
        if mode == SplitMode::RescaledSubflow && kind != SplitKind::Sequential {
            return Err(Error::InvalidParameter(
                "the rescaled subflow mode is only defined for the sequential splitting".into(),
            ));
        }
        Ok(Self { kind, theta, mode })
    }

    pub fn sequential() -> Self {
        Self {
            kind: SplitKind::Sequential,
            theta: 0.5,
            mode: SplitMode::FrozenCoefficient,
        }
    }

    pub fn strang() -> Self {
        Self {
            kind: SplitKind::Strang,
            ..Self::sequential()
        }
    }

    pub fn weighted(theta: f64) -> Result<Self> {
        Self::new(SplitKind::Weighted, theta, SplitMode::FrozenCoefficient)
    }

    pub fn with_mode(self, mode: SplitMode) -> Result<Self> {
        Self::new(self.kind, self.theta, mode)
    }
}

/// Uniform macro-step partition of `[s, t]` into `n` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSpan {
    s: f64,
    t: f64,
    n: usize,
}

impl TimeSpan {
    pub fn new(s: f64, t: f64, n: usize) -> Result<Self> {
        if !(s.is_finite() && t.is_finite()) || s > t {
            return Err(Error::InvalidParameter(format!(
                "time span needs finite s <= t, got s = {s}, t = {t}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("number of steps must be >= 1".into()));
        }
        Ok(Self { s, t, n })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        (self.t - self.s) / self.n as f64
    }

    /// `s + k tau`, computed from the integer `k`; the last node is `t`.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n {
            self.t
        } else {
            self.s + k as f64 * self.tau()
        }
    }
}

/// Which states a run keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Storage {
    /// Initial and final state only.
    #[default]
    Endpoints,
    /// One state per macro step including the initial one.
    Full,
}

#[derive(Clone, Debug)]
pub struct SplitRun {
    pub scheme: SplitScheme,
    pub s: f64,
    pub t: f64,
    /// Number of macro steps applied; zero when `s == t`.
    pub n_steps: usize,
    pub trajectory: Vec<State>,
}

impl SplitRun {
    pub fn initial(&self) -> &State {
        &self.trajectory[0]
    }

    pub fn final_state(&self) -> &State {
        self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn into_final(mut self) -> State {
        self.trajectory.pop().expect("trajectory is never empty")
    }
}

/// A sub-problem with its generator frozen at `t_freeze`:
/// `x -> e^{tau G(t_freeze)} x`.
pub trait FrozenFlow {
    fn apply(&self, x: &[f64], t_freeze: f64, tau: f64) -> Result<Vec<f64>>;
}

/// A non-autonomous evolution family: `x -> U(to, from) x`.
pub trait Evolution {
    fn propagate(&self, x: &[f64], from: f64, to: f64) -> Result<Vec<f64>>;
}

fn drive<F>(
    scheme: SplitScheme,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
    mut step: F,
) -> Result<SplitRun>
where
    F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
{
    let start = State::new(x.values.clone(), span.s);
    if span.s == span.t {
        return Ok(SplitRun {
            scheme,
            s: span.s,
            t: span.t,
            n_steps: 0,
            trajectory: vec![start],
        });
    }
    let mut trajectory = Vec::with_capacity(match storage {
        Storage::Full => span.n + 1,
        Storage::Endpoints => 2,
    });
    let mut current = start.values.clone();
    trajectory.push(start);
    for p in 0..span.n {
        current = step(p, &current).map_err(Error::at_step(p))?;
        if storage == Storage::Full {
            trajectory.push(State::new(current.clone(), span.time(p + 1)));
        }
    }
    if storage == Storage::Endpoints {
        trajectory.push(State::new(current, span.t));
    }
    Ok(SplitRun {
        scheme,
        s: span.s,
        t: span.t,
        n_steps: span.n,
        trajectory,
    })
}

/// Sequential splitting with frozen coefficients: each macro step applies
/// the `A`-flow then the `B`-flow, both frozen at the left endpoint.
pub fn run_frozen_sequential<A, B>(
    flow_a: &A,
    flow_b: &B,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    A: FrozenFlow + ?Sized,
    B: FrozenFlow + ?Sized,
{
    let tau = span.tau();
    drive(SplitScheme::sequential(), span, x, storage, |p, u| {
        let r = span.time(p);
        let half = flow_a.apply(u, r, tau)?;
        flow_b.apply(&half, r, tau)
    })
}

/// Strang splitting with frozen coefficients: half `A`-step, full `B`-step,
/// half `A`-step.
pub fn run_frozen_strang<A, B>(
    flow_a: &A,
    flow_b: &B,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    A: FrozenFlow + ?Sized,
    B: FrozenFlow + ?Sized,
{
    let tau = span.tau();
    drive(SplitScheme::strang(), span, x, storage, |p, u| {
        let r = span.time(p);
        let y = flow_a.apply(u, r, 0.5 * tau)?;
        let y = flow_b.apply(&y, r, tau)?;
        flow_a.apply(&y, r, 0.5 * tau)
    })
}

/// Weighted splitting with frozen coefficients. Needs linear sub-flows.
pub fn run_frozen_weighted<A, B>(
    flow_a: &A,
    flow_b: &B,
    theta: f64,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    A: FrozenFlow + ?Sized,
    B: FrozenFlow + ?Sized,
{
    let scheme = SplitScheme::weighted(theta)?;
    let tau = span.tau();
    drive(scheme, span, x, storage, |p, u| {
        let r = span.time(p);
        let ba = flow_b.apply(&flow_a.apply(u, r, tau)?, r, tau)?;
        let ab = flow_a.apply(&flow_b.apply(u, r, tau)?, r, tau)?;
        Ok(ba
            .iter()
            .zip(&ab)
            .map(|(x, y)| theta * x + (1.0 - theta) * y)
            .collect())
    })
}

/// Dispatches a frozen-coefficient scheme.
pub fn run_frozen<A, B>(
    scheme: SplitScheme,
    flow_a: &A,
    flow_b: &B,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    A: FrozenFlow + ?Sized,
    B: FrozenFlow + ?Sized,
{
    if scheme.mode != SplitMode::FrozenCoefficient {
        return Err(Error::InvalidParameter(format!(
            "run_frozen needs a frozen-coefficient scheme, got {:?}",
            scheme.mode
        )));
    }
    match scheme.kind {
        SplitKind::Sequential => run_frozen_sequential(flow_a, flow_b, span, x, storage),
        SplitKind::Strang => run_frozen_strang(flow_a, flow_b, span, x, storage),
        SplitKind::Weighted => run_frozen_weighted(flow_a, flow_b, scheme.theta, span, x, storage),
    }
}

/// Sequential splitting of the true sub-evolutions:
/// `prod_p V(s+(p+1)tau, s+p tau) U(s+(p+1)tau, s+p tau) x`.
pub fn run_subflow_sequential<U, V>(
    evo_a: &U,
    evo_b: &V,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    U: Evolution + ?Sized,
    V: Evolution + ?Sized,
{
    let scheme = SplitScheme::sequential().with_mode(SplitMode::Subflow)?;
    drive(scheme, span, x, storage, |p, u| {
        let (from, to) = (span.time(p), span.time(p + 1));
        let y = evo_a.propagate(u, from, to)?;
        evo_b.propagate(&y, from, to)
    })
}

/// Sequential splitting with the time-rescaled evolutions `Ũ`, `Ṽ` generated
/// by `A(./2)` and `B(./2)`. Macro step `p` applies `Ũ` over
/// `[2s + 2p tau, 2s + (2p+1) tau]` and then `Ṽ` over
/// `[2s + (2p+1) tau, 2s + (2p+2) tau]`.
pub fn run_rescaled_sequential<U, V>(
    evo_a_rescaled: &U,
    evo_b_rescaled: &V,
    span: &TimeSpan,
    x: &State,
    storage: Storage,
) -> Result<SplitRun>
where
    U: Evolution + ?Sized,
    V: Evolution + ?Sized,
{
    let scheme = SplitScheme::sequential().with_mode(SplitMode::RescaledSubflow)?;
    let (s, tau) = (span.s(), span.tau());
    drive(scheme, span, x, storage, |p, u| {
        let t0 = 2.0 * s + (2 * p) as f64 * tau;
        let t1 = 2.0 * s + (2 * p + 1) as f64 * tau;
        let t2 = 2.0 * s + (2 * p + 2) as f64 * tau;
        let y = evo_a_rescaled.propagate(u, t0, t1)?;
        evo_b_rescaled.propagate(&y, t1, t2)
    })
}

// ---------------------------------------------------------------------------
// Matrix backend

fn mat_vec(m: &nalgebra::DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.ncols(),
            got: x.len(),
        });
    }
    Ok((m * DVector::from_column_slice(x)).as_slice().to_vec())
}

/// Frozen flow `e^{tau A(t_freeze)}` of a matrix generator.
#[derive(Clone, Debug)]
pub struct MatrixExpFlow {
    pub generator: MatrixGenerator,
}

impl MatrixExpFlow {
    pub fn new(generator: MatrixGenerator) -> Self {
        Self { generator }
    }
}

impl FrozenFlow for MatrixExpFlow {
    fn apply(&self, x: &[f64], t_freeze: f64, tau: f64) -> Result<Vec<f64>> {
        let e = matrix_expm(&(self.generator.at(t_freeze) * tau))?;
        mat_vec(&e, x)
    }
}

/// True evolution family of a matrix generator. Autonomous generators use
/// the matrix exponential, others the RK4 oracle.
#[derive(Clone, Debug)]
pub struct MatrixEvolution {
    pub generator: MatrixGenerator,
    pub opts: OracleOptions,
}

impl MatrixEvolution {
    pub fn new(generator: MatrixGenerator) -> Self {
        Self {
            generator,
            opts: OracleOptions::default(),
        }
    }
}

impl Evolution for MatrixEvolution {
    fn propagate(&self, x: &[f64], from: f64, to: f64) -> Result<Vec<f64>> {
        if self.generator.is_autonomous() {
            if !(from <= to) {
                return Err(Error::InvalidParameter(format!(
                    "evolution interval must satisfy from <= to, got [{from}, {to}]"
                )));
            }
            let e = matrix_expm(&(self.generator.at(from) * (to - from)))?;
            mat_vec(&e, x)
        } else {
            oracle_apply(&self.generator, x, from, to, self.opts)
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-difference backend

/// Crank–Nicolson diffusion sub-step.
#[derive(Clone, Copy, Debug)]
pub struct CnDiffusionFlow {
    pub grid: Grid1D,
}

impl FrozenFlow for CnDiffusionFlow {
    fn apply(&self, x: &[f64], _t_freeze: f64, tau: f64) -> Result<Vec<f64>> {
        Ok(cn_diffusion_step(&State::new(x.to_vec(), 0.0), &self.grid, tau)?.values)
    }
}

/// Exact diffusion sub-step `e^{tau L}`.
#[derive(Clone, Debug)]
pub struct ExactDiffusionFlow {
    pub flow: ExactDiffusion,
}

impl ExactDiffusionFlow {
    pub fn new(grid: &Grid1D) -> Self {
        Self {
            flow: ExactDiffusion::new(grid),
        }
    }
}

impl FrozenFlow for ExactDiffusionFlow {
    fn apply(&self, x: &[f64], _t_freeze: f64, tau: f64) -> Result<Vec<f64>> {
        Ok(self.flow.step(&State::new(x.to_vec(), 0.0), tau)?.values)
    }
}

/// Exact potential sub-step `e^{tau V(., t_freeze)}`.
#[derive(Clone, Debug)]
pub struct PotentialFlow {
    pub grid: Grid1D,
    pub potential: Potential,
}

impl FrozenFlow for PotentialFlow {
    fn apply(&self, x: &[f64], t_freeze: f64, tau: f64) -> Result<Vec<f64>> {
        Ok(potential_step_exact(&State::new(x.to_vec(), 0.0), &self.grid, &self.potential, t_freeze, tau)?.values)
    }
}

/// How the diffusion sub-problem is advanced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiffusionSubstep {
    #[default]
    CrankNicolson,
    /// `e^{tau L}` in the sine eigenbasis; positivity preserving.
    Exact,
}

/// Order of the two sub-flows inside a sequential macro step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SubflowOrder {
    /// Diffusion first, then the potential.
    #[default]
    DiffusionFirst,
    PotentialFirst,
}

/// Splits `u' = u_xx + V(x, t) u` on a grid with Dirichlet boundary, with
/// the diffusion part as the `A` sub-problem and the potential as `B`.
pub fn run_pde_split(
    grid: &Grid1D,
    potential: &Potential,
    scheme: SplitScheme,
    order: SubflowOrder,
    diffusion: DiffusionSubstep,
    span: &TimeSpan,
    u0: &State,
    storage: Storage,
) -> Result<SplitRun> {
    grid.check_len(&u0.values)?;
    let pot = PotentialFlow {
        grid: *grid,
        potential: potential.clone(),
    };
    let diff: Box<dyn FrozenFlow> = match diffusion {
        DiffusionSubstep::CrankNicolson => Box::new(CnDiffusionFlow { grid: *grid }),
        DiffusionSubstep::Exact => Box::new(ExactDiffusionFlow::new(grid)),
    };
    match order {
        SubflowOrder::DiffusionFirst => run_frozen(scheme, diff.as_ref(), &pot, span, u0, storage),
        SubflowOrder::PotentialFirst => run_frozen(scheme, &pot, diff.as_ref(), span, u0, storage),
    }
}

/// The finite-difference sequential splitting: per macro step one
/// Crank–Nicolson diffusion step, then the exact potential step with `V`
/// frozen at the step's left endpoint.
pub fn run_pde_sequential(
    grid: &Grid1D,
    potential: &Potential,
    u0: &State,
    span: &TimeSpan,
    storage: Storage,
) -> Result<SplitRun> {
    run_pde_split(
        grid,
        potential,
        SplitScheme::sequential(),
        SubflowOrder::DiffusionFirst,
        DiffusionSubstep::CrankNicolson,
        span,
        u0,
        storage,
    )
}

/// Unsplit Crank–Nicolson reference trajectory over `span`.
pub fn run_reference(
    grid: &Grid1D,
    potential: &Potential,
    u0: &State,
    span: &TimeSpan,
    storage: Storage,
) -> Result<SplitRun> {
    grid.check_len(&u0.values)?;
    let tau = span.tau();
    drive(SplitScheme::sequential(), span, u0, storage, |p, u| {
        let state = State::new(u.to_vec(), span.time(p));
        Ok(crate::propagators::cn_reference_step(&state, grid, potential, span.time(p), tau)?.values)
    })
}
