//! Command-line front end of the `nasplit` binary.
//!
//! Exit codes: 0 success, 1 configuration or i/o error, 2 numerical failure.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_order, cmd_oracle, cmd_solve, cmd_sweep, fmt_f64, CliError, CliResult, OracleOutput,
    OrderOutput, SolveOutput, SweepOutput,
};
pub use config::{ConfigError, ExperimentConfig, Preset, TimeSteps};

#[derive(Debug, Parser)]
#[command(name = "nasplit", version, about = "Operator splitting experiments for u_t = u_xx + V(x, t) u")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write solution snapshots as two-column plot data.
    Solve(Overrides),
    /// Local splitting errors over a step-size list and their fitted order.
    Order(Overrides),
    /// Convergence rates of sequential and Strang splitting on random matrices.
    Oracle(Overrides),
    /// Error table over coarse grid sizes m and step counts n.
    Sweep(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: paper-8.3, paper-fig1, manufactured-quadratic, commuting.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    tau: Option<String>,
    /// Comma-separated step counts.
    #[arg(long)]
    n: Option<String>,
    /// Number of grid points.
    #[arg(long)]
    grid: Option<String>,
    /// `l2` or `max`.
    #[arg(long)]
    norm: Option<String>,
    /// Reference on a grid refined by this factor.
    #[arg(long = "ref-refine")]
    ref_refine: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let preset = self.preset.as_deref().map(Preset::from_name).transpose()?;
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse(&text, preset)?
            }
            None => preset.map(ExperimentConfig::preset).unwrap_or_default(),
        };
        if self.tau.is_some() || self.n.is_some() {
            cfg.time = None;
        }
        let pairs = [
            ("taus", &self.tau),
            ("n", &self.n),
            ("grid", &self.grid),
            ("norm", &self.norm),
            ("ref_refine", &self.ref_refine),
            ("seed", &self.seed),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> CliResult<String> {
    match command {
        Command::Solve(o) => {
            let cfg = o.load()?;
            let out = cmd_solve(&cfg)?;
            let peaks: Vec<String> = out
                .snapshots
                .iter()
                .map(|s| format!("t={} max={:.6e}", s.time, s.max_abs()))
                .collect();
            Ok(format!("wrote {} files to {}\n{}", out.files.len(), cfg.out.display(), peaks.join("\n")))
        }
        Command::Order(o) => {
            let cfg = o.load()?;
            let out = cmd_order(&cfg)?;
            let f = out.fit;
            Ok(format!(
                "slope a = {:.4}, intercept b = {:.5} (log10), order p = {:.4}, residual = {:.3e}",
                f.slope_a,
                f.intercept_log10(),
                f.estimated_order_p,
                f.residual
            ))
        }
        Command::Oracle(o) => {
            let cfg = o.load()?;
            let out = cmd_oracle(&cfg)?;
            Ok(match (out.all_exact, out.mean_sequential_order, out.mean_strang_order) {
                (true, _, _) => format!("{} instances, verdict: exact", out.reports.len()),
                (false, Some(seq), Some(strang)) => format!(
                    "{} instances, mean sequential order {seq:.4}, mean Strang order {strang:.4}",
                    out.reports.len()
                ),
                _ => format!("{} instances, mixed verdicts", out.reports.len()),
            })
        }
        Command::Sweep(o) => {
            let cfg = o.load()?;
            let out = cmd_sweep(&cfg)?;
            Ok(format!(
                "spatial slope {}, monotone in m: {}, monotone in n: {}",
                out.table.spatial_slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into()),
                out.monotone_in_m,
                out.monotone_in_n
            ))
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("nasplit: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}
