use std::fs;
use std::path::Path;
use std::process::Command;

use nasplit::cli::{cmd_oracle, cmd_order, cmd_solve, ExperimentConfig, Preset, TimeSteps};
use nasplit::grid::InitialCondition;

fn nasplit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nasplit"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).expect("csv");
    let head = r.headers().expect("header").iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.expect("record").iter().map(String::from).collect())
        .collect();
    (head, rows)
}

fn cfg_in(dir: &Path, preset: Preset) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(preset);
    cfg.out = dir.to_path_buf();
    cfg
}

#[test]
fn order_csv_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path(), Preset::Paper83);
    cfg.grid = 101;
    let out = cmd_order(&cfg).unwrap();
    let (head, rows) = read_csv(&dir.path().join("order.csv"));
    assert_eq!(head, ["tau", "error", "rel_error"]);
    for (row, e) in rows.iter().zip(out.series.entries()) {
        let parsed: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, [e.tau, e.error, e.rel_error]);
    }
    let (head, rows) = read_csv(&dir.path().join("order_summary.csv"));
    assert_eq!(head, ["slope", "intercept", "order", "residual"]);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), out.fit.slope_a);
    let text = fs::read_to_string(dir.path().join("order.csv")).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn manufactured_quadratic_slope_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_order(&cfg_in(dir.path(), Preset::ManufacturedQuadratic)).unwrap();
    assert!((out.fit.slope_a - 2.0).abs() < 1e-10);
    assert!((out.fit.estimated_order_p - 1.0).abs() < 1e-10);
}

#[test]
fn three_step_sizes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = nasplit(&["order", "--tau", "1e-3,5e-4,2.5e-4", "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("at least 4"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    assert_eq!(nasplit(&["--help"]).0, 0);
    assert_eq!(nasplit(&["--version"]).0, 0);
    assert_eq!(nasplit(&["frobnicate"]).0, 1);
    assert_eq!(nasplit(&["order", "--preset", "paper-9"]).0, 1);
    assert_eq!(nasplit(&["order", "--config", "/nonexistent/cfg.txt"]).0, 1);
    assert_eq!(nasplit(&["order", "--grid", "2", "--out", out]).0, 1);

    // exp(tau V) overflows: numerical failure
    let cfg = dir.path().join("blowup.cfg");
    fs::write(&cfg, "potential = const:1e6\ntaus = 2e-3, 1e-3, 5e-4, 2.5e-4\n").unwrap();
    let (code, _, err) = nasplit(&["order", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{err}");

    let (code, stdout, _) = nasplit(&["order", "--preset", "manufactured-quadratic", "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("slope a = 2.0000"));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let (code, _, err) = nasplit(&["order", "--preset", "manufactured-quadratic", "--out", target.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# smaller grid\npreset = paper-8.3\ngrid = 51\nnorm = max\ntaus = 2e-3, 1e-3, 5e-4, 2.5e-4\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = nasplit(&[
        "order",
        "--config",
        cfg.to_str().unwrap(),
        "--tau",
        "1e-3,5e-4,2.5e-4,1.25e-4,6.25e-5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&out.join("order.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][0].parse::<f64>().unwrap(), 6.25e-5);
}

#[test]
fn solve_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cfg_in(dir.path(), Preset::PaperFig1);
    let out = cmd_solve(&cfg).unwrap();
    assert_eq!(out.snapshots.len(), 4);
    // the first snapshot is the sampled initial condition
    let u0 = InitialCondition::gaussian(0.4, 50.0).state(&out.grid, 0.0);
    assert_eq!(out.snapshots[0].values, u0.values);
    let peaks: Vec<f64> = out.snapshots.iter().map(|s| s.max_abs()).collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");

    let text = fs::read_to_string(dir.path().join("solution.dat")).unwrap();
    let blocks: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(blocks.len(), 4);
    for block in blocks {
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines.len(), 201);
        assert!(lines.iter().all(|l| l.split(' ').count() == 2));
    }
    let first = fs::read_to_string(dir.path().join("snapshot_0.dat")).unwrap();
    for (line, (x, u)) in first.lines().zip(out.grid.points().zip(&u0.values)) {
        let cols: Vec<f64> = line.split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(cols, [x, *u]);
    }
}

#[test]
fn solve_zero_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path(), Preset::PaperFig1);
    cfg.initial = "zero".into();
    cfg.solver = nasplit::cli::config::Solver::Split;
    let out = cmd_solve(&cfg).unwrap();
    assert!(out.snapshots.iter().all(|s| s.values.iter().all(|&u| u == 0.0)));
}

#[test]
fn solve_rejects_off_grid_times() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path(), Preset::PaperFig1);
    cfg.times = vec![0.0, 3.3e-5];
    let err = cmd_solve(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("times"));
}

#[test]
fn oracle_exact_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path(), Preset::Commuting);
    cfg.instances = 5;
    let out = cmd_oracle(&cfg).unwrap();
    assert!(out.all_exact);
    let mut scalar = cfg_in(dir.path(), Preset::Paper83);
    scalar.dim = 1;
    scalar.instances = 4;
    let out = cmd_oracle(&scalar).unwrap();
    assert!(out.all_exact);
    let (_, rows) = read_csv(&dir.path().join("oracle_aggregate.csv"));
    assert_eq!(rows[0][0], "exact");
    let (head, rows) = read_csv(&dir.path().join("oracle_instance_03.csv"));
    assert_eq!(head, ["n", "seq_error", "strang_error"]);
    assert_eq!(rows.len(), 5);
}

#[test]
fn oracle_step_counts_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path(), Preset::Paper83);
    cfg.instances = 3;
    cfg.time = Some(TimeSteps::Counts(vec![10, 20, 40, 80]));
    let out = cmd_oracle(&cfg).unwrap();
    assert!(out.reports.iter().all(|r| r.ns == [10, 20, 40, 80]));
    let order = out.mean_sequential_order.unwrap();
    assert!((0.85..=1.15).contains(&order), "{order}");
}
