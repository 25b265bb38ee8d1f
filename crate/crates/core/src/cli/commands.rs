//! The four experiment commands. Each collects every result in memory
//! first and writes its files afterwards, so reruns are byte-identical.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{
    ConfigError, ExperimentConfig, InstanceKind, Solver, DEFAULT_ORACLE_NS, DEFAULT_SOLVE_STEPS,
    DEFAULT_SWEEP_NS, DEFAULT_TAUS,
};
use crate::analysis::{
    approximation_sweep, fit_order, jl_rate_check, local_error_sweep, ErrorEntry, ErrorSeries,
    OrderConvention, OrderFit, RateReport, RateVerdict, SweepTable,
};
use crate::grid::{Grid1D, State};
use crate::propagators::MatrixInstance;
use crate::splitting::{run_pde_split, run_reference, Storage, SubflowOrder, TimeSpan};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Numerical(crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Numerical(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// 17 significant digits: parsing the text gives back the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub grid: Grid1D,
    pub snapshots: Vec<State>,
    pub files: Vec<PathBuf>,
}

/// Writes `snapshot_<k>.dat` per requested time and all blocks together in
/// `solution.dat`; two space-separated columns `x u`.
pub fn cmd_solve(cfg: &ExperimentConfig) -> CliResult<SolveOutput> {
    let problem = cfg.problem()?;
    let n = match cfg.counts_or(&[DEFAULT_SOLVE_STEPS])?.as_slice() {
        [n] => *n,
        _ => return Err(ConfigError::new("n", "solve takes a single step count").into()),
    };
    let span = TimeSpan::new(cfg.t0, cfg.t_end, n)?;
    let tau = span.tau();
    let mut indices = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let k = ((t - cfg.t0) / tau).round();
        let on_grid = (cfg.t0 + k * tau - t).abs() <= 1e-9 * t.abs().max(tau);
        if !(on_grid && k >= 0.0 && k as usize <= n) {
            return Err(ConfigError::new("times", format!("{t} is not a step time in [{}, {}] with {n} steps", cfg.t0, cfg.t_end)).into());
        }
        indices.push(k as usize);
    }
    let u0 = problem.initial_state();
    let run = match cfg.solver {
        Solver::Reference => run_reference(&problem.grid, &problem.potential, &u0, &span, Storage::Full)?,
        Solver::Split => run_pde_split(
            &problem.grid,
            &problem.potential,
            cfg.scheme,
            SubflowOrder::DiffusionFirst,
            cfg.diffusion,
            &span,
            &u0,
            Storage::Full,
        )?,
    };
    let snapshots: Vec<State> = indices.iter().map(|&k| run.trajectory[k].clone()).collect();
    let blocks: Vec<String> = snapshots
        .iter()
        .map(|s| {
            problem
                .grid
                .points()
                .zip(&s.values)
                .map(|(x, u)| format!("{} {}\n", fmt_f64(x), fmt_f64(*u)))
                .collect()
        })
        .collect();
    prepare_out(&cfg.out)?;
    let mut files = Vec::new();
    let write = |path: PathBuf, text: &str| -> CliResult<PathBuf> {
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    };
    for (k, block) in blocks.iter().enumerate() {
        files.push(write(cfg.out.join(format!("snapshot_{k}.dat")), block)?);
    }
    files.push(write(cfg.out.join("solution.dat"), &blocks.join("\n"))?);
    Ok(SolveOutput {
        grid: problem.grid,
        snapshots,
        files,
    })
}

#[derive(Clone, Debug)]
pub struct OrderOutput {
    pub series: ErrorSeries,
    pub fit: OrderFit,
}

/// Local-error sweep and order fit; `order.csv` holds `tau,error,rel_error`
/// and `order_summary.csv` one line `slope,intercept,order,residual` with
/// the intercept in base-10 logarithms.
pub fn cmd_order(cfg: &ExperimentConfig) -> CliResult<OrderOutput> {
    cfg.validate()?;
    let taus = cfg.taus_or(&DEFAULT_TAUS);
    if taus.len() < 4 {
        return Err(ConfigError::new("taus", format!("order fitting needs at least 4 step sizes, got {}", taus.len())).into());
    }
    let series = match cfg.manufactured {
        Some(p) => ErrorSeries::new(
            taus.iter()
                .map(|&tau| ErrorEntry {
                    tau,
                    error: tau.powf(p),
                    rel_error: tau.powf(p),
                })
                .collect(),
            cfg.norm,
        )?,
        None => local_error_sweep(&cfg.problem()?, &taus, cfg.norm, cfg.reference)?,
    };
    let fit = fit_order(&series, OrderConvention::Local)?;
    prepare_out(&cfg.out)?;
    let rows: Vec<Vec<String>> = series
        .entries()
        .iter()
        .map(|e| vec![fmt_f64(e.tau), fmt_f64(e.error), fmt_f64(e.rel_error)])
        .collect();
    write_csv(&cfg.out.join("order.csv"), &header(&["tau", "error", "rel_error"]), &rows)?;
    write_csv(
        &cfg.out.join("order_summary.csv"),
        &header(&["slope", "intercept", "order", "residual"]),
        &[vec![
            fmt_f64(fit.slope_a),
            fmt_f64(fit.intercept_log10()),
            fmt_f64(fit.estimated_order_p),
            fmt_f64(fit.residual),
        ]],
    )?;
    Ok(OrderOutput { series, fit })
}

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub reports: Vec<RateReport>,
    /// Mean fitted sequential order over instances with a fit.
    pub mean_sequential_order: Option<f64>,
    pub mean_strang_order: Option<f64>,
    pub all_exact: bool,
}

/// Seeded matrix instances through [`jl_rate_check`]; per-instance files
/// `oracle_instance_<i>.csv` with `n,seq_error,strang_error`, and
/// `oracle_summary.csv`, `oracle_aggregate.csv`.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> CliResult<OracleOutput> {
    if cfg.dim == 0 || cfg.instances == 0 {
        return Err(ConfigError::new("dim", "dimension and instance count must be positive").into());
    }
    if !(cfg.matrix_t > 0.0) {
        return Err(ConfigError::new("matrix_t", "must be positive").into());
    }
    let ns = cfg.counts_over(0.0, cfg.matrix_t, &DEFAULT_ORACLE_NS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let instances = (0..cfg.instances)
        .map(|_| match cfg.instance_kind {
            InstanceKind::Random => MatrixInstance::random(&mut rng, cfg.dim, 0.5, 10.0, 1.0),
            InstanceKind::Commuting => MatrixInstance::commuting(&mut rng, cfg.dim),
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let reports = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| jl_rate_check(inst, cfg.alpha, cfg.matrix_t, &ns, cfg.seed.wrapping_add(i as u64)))
        .collect::<crate::Result<Vec<_>>>()?;
    let mean = |orders: Vec<f64>| (!orders.is_empty()).then(|| orders.iter().sum::<f64>() / orders.len() as f64);
    let mean_sequential_order = mean(reports.iter().filter_map(|r| r.sequential).map(|f| f.estimated_order_p).collect());
    let mean_strang_order = mean(reports.iter().filter_map(|r| r.strang).map(|f| f.estimated_order_p).collect());
    let all_exact = reports.iter().all(|r| r.verdict == RateVerdict::Exact);

    prepare_out(&cfg.out)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut summary = Vec::with_capacity(reports.len());
    for (i, r) in reports.iter().enumerate() {
        let rows: Vec<Vec<String>> = r
            .ns
            .iter()
            .zip(r.sequential_errors.iter().zip(&r.strang_errors))
            .map(|(n, (s, g))| vec![n.to_string(), fmt_f64(*s), fmt_f64(*g)])
            .collect();
        write_csv(
            &cfg.out.join(format!("oracle_instance_{i:02}.csv")),
            &header(&["n", "seq_error", "strang_error"]),
            &rows,
        )?;
        summary.push(vec![
            i.to_string(),
            verdict_name(r.verdict).into(),
            opt(r.sequential.map(|f| f.estimated_order_p)),
            opt(r.strang.map(|f| f.estimated_order_p)),
            fmt_f64(r.commutator.best_c),
            r.commutator.holds().to_string(),
        ]);
    }
    write_csv(
        &cfg.out.join("oracle_summary.csv"),
        &header(&["instance", "verdict", "seq_order", "strang_order", "best_c", "bound_holds"]),
        &summary,
    )?;
    write_csv(
        &cfg.out.join("oracle_aggregate.csv"),
        &header(&["verdict", "instances", "mean_seq_order", "mean_strang_order"]),
        &[vec![
            if all_exact { "exact" } else { "fitted" }.into(),
            reports.len().to_string(),
            opt(mean_sequential_order),
            opt(mean_strang_order),
        ]],
    )?;
    Ok(OracleOutput {
        reports,
        mean_sequential_order,
        mean_strang_order,
        all_exact,
    })
}

fn verdict_name(v: RateVerdict) -> &'static str {
    match v {
        RateVerdict::Exact => "exact",
        RateVerdict::Fitted => "fitted",
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub table: SweepTable,
    /// Errors at the largest `n` strictly decrease as `m` grows.
    pub monotone_in_m: bool,
    /// Errors at the largest `m` strictly decrease as `n` grows.
    pub monotone_in_n: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// The `(m, n)` error table; `sweep.csv` has one row per `m` and one column
/// per `n`, `sweep_spatial.csv` the spatial errors and `sweep_summary.csv`
/// the spatial slope and monotonicity flags.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> CliResult<SweepOutput> {
    let problem = cfg.problem()?;
    let ns = cfg.counts_or(&DEFAULT_SWEEP_NS)?;
    let mut ms = cfg.ms.clone();
    ms.sort_unstable();
    let mut ns_sorted = ns.clone();
    ns_sorted.sort_unstable();
    let table = approximation_sweep(&problem, &ms, &ns_sorted, cfg.t_end, cfg.ref_factor, cfg.norm)?;
    let last_col: Vec<f64> = table.errors.iter().map(|row| *row.last().expect("ns is non-empty")).collect();
    let monotone_in_m = strictly_decreasing(&last_col);
    let monotone_in_n = strictly_decreasing(table.errors.last().expect("ms is non-empty"));

    prepare_out(&cfg.out)?;
    let mut head = vec!["m".to_string()];
    head.extend(table.ns.iter().map(|n| n.to_string()));
    let rows: Vec<Vec<String>> = table
        .ms
        .iter()
        .zip(&table.errors)
        .map(|(m, row)| std::iter::once(m.to_string()).chain(row.iter().map(|e| fmt_f64(*e))).collect())
        .collect();
    write_csv(&cfg.out.join("sweep.csv"), &head, &rows)?;
    let spatial: Vec<Vec<String>> = table
        .ms
        .iter()
        .zip(&table.spatial_errors)
        .map(|(&m, e)| vec![m.to_string(), fmt_f64((cfg.x_max - cfg.x_min) / (m - 1) as f64), fmt_f64(*e)])
        .collect();
    write_csv(&cfg.out.join("sweep_spatial.csv"), &header(&["m", "spacing", "spatial_error"]), &spatial)?;
    write_csv(
        &cfg.out.join("sweep_summary.csv"),
        &header(&["spatial_slope", "monotone_in_m", "monotone_in_n"]),
        &[vec![
            table.spatial_slope.map(fmt_f64).unwrap_or_default(),
            monotone_in_m.to_string(),
            monotone_in_n.to_string(),
        ]],
    )?;
    Ok(SweepOutput {
        table,
        monotone_in_m,
        monotone_in_n,
    })
}
