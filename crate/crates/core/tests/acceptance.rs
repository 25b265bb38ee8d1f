//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines print in order; exits non-zero on failure.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{dmatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nasplit::analysis::{
    error_norm, fit_order, pde_positivity, ErrorEntry, ErrorSeries, NormKind, OrderConvention,
    PdeProblem,
};
use nasplit::approximation::make_injection_pair;
use nasplit::cli::{cmd_oracle, cmd_order, cmd_solve, cmd_sweep, ExperimentConfig, Preset};
use nasplit::grid::{make_grid, Potential, State};
use nasplit::propagators::{matrix_expm, oracle_apply, MatrixGenerator, MatrixInstance, OracleOptions};
use nasplit::splitting::{
    run_frozen_sequential, run_frozen_strang, run_frozen_weighted, run_pde_sequential,
    run_reference, run_rescaled_sequential, run_subflow_sequential, DiffusionSubstep,
    MatrixEvolution, MatrixExpFlow, Storage, TimeSpan,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn preset_into(preset: Preset, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(preset);
    cfg.out = dir.to_path_buf();
    cfg
}

fn smooth_a() -> MatrixGenerator {
    MatrixGenerator::from_fn(3, |t| {
        dmatrix![
            -1.0 - 0.5 * t.sin(), 0.0, 0.0;
            0.0, -2.0, 0.0;
            0.0, 0.0, -0.5 + 0.2 * t.cos()
        ]
    })
}

fn smooth_b() -> MatrixGenerator {
    MatrixGenerator::from_fn(3, |t| {
        dmatrix![
            0.0, 0.3 * t, 0.2;
            0.1 * (2.0 * t).cos(), 0.0, 0.4 * t * t;
            0.0, 0.5 * (1.0 + t).ln(), 0.0
        ]
    })
}

fn global_fit(t: f64, ns: &[usize], errs: &[f64]) -> f64 {
    let entries = ns
        .iter()
        .zip(errs)
        .map(|(&n, &e)| ErrorEntry {
            tau: t / n as f64,
            error: e,
            rel_error: e,
        })
        .collect();
    let series = ErrorSeries::new(entries, NormKind::DiscreteL2).expect("valid series");
    fit_order(&series, OrderConvention::Global).expect("fit").estimated_order_p
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    error_norm(a, b, 1.0, NormKind::DiscreteL2).expect("same length")
}

fn criterion_1(tmp: &Path) -> Outcome {
    let out = cmd_order(&preset_into(Preset::Paper83, tmp)).expect("order run");
    let (a, p) = (out.fit.slope_a, out.fit.estimated_order_p);
    outcome(
        (1.7..=2.2).contains(&a) && (0.7..=1.2).contains(&p),
        format!("slope a = {a:.4}, order p = {p:.4}, intercept (log10) = {:.4}", out.fit.intercept_log10()),
    )
}

fn criterion_2(tmp: &Path) -> Outcome {
    let out = cmd_oracle(&preset_into(Preset::Paper83, tmp)).expect("oracle run");
    let order = out.mean_sequential_order.unwrap_or(f64::NAN);
    let bounds_ok = out
        .reports
        .iter()
        .all(|r| r.commutator.best_c.is_finite() && r.commutator.holds());
    outcome(
        out.reports.len() == 20 && (0.85..=1.15).contains(&order) && bounds_ok,
        format!("{} instances, mean sequential order {order:.4}, commutator bounds finite: {bounds_ok}", out.reports.len()),
    )
}

fn criterion_3() -> Outcome {
    let x = State::new(vec![1.0, -0.5, 0.25], 0.0);
    let sum = smooth_a().sum(&smooth_b()).expect("same dimension");
    let exact = oracle_apply(&sum, &x.values, 0.0, 1.0, OracleOptions::default()).expect("oracle");
    let (fa, fb) = (MatrixExpFlow::new(smooth_a()), MatrixExpFlow::new(smooth_b()));
    let ns = [32, 64, 128, 256];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let span = TimeSpan::new(0.0, 1.0, n).expect("span");
            let run = run_frozen_sequential(&fa, &fb, &span, &x, Storage::Endpoints).expect("run");
            dist(&run.final_state().values, &exact)
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    outcome(
        ratios.iter().all(|r| (0.35..=0.65).contains(r)),
        format!("err(2n)/err(n) for n = 32..128: {:?}", ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()),
    )
}

fn criterion_4() -> Outcome {
    let x = State::new(vec![1.0, -0.5, 0.25], 0.0);
    let sum = smooth_a().sum(&smooth_b()).expect("same dimension");
    let exact = oracle_apply(&sum, &x.values, 0.0, 1.0, OracleOptions::default()).expect("oracle");
    let (ea, eb) = (MatrixEvolution::new(smooth_a()), MatrixEvolution::new(smooth_b()));
    let ns = [16, 32, 64, 128];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let span = TimeSpan::new(0.0, 1.0, n).expect("span");
            let run = run_subflow_sequential(&ea, &eb, &span, &x, Storage::Endpoints).expect("run");
            dist(&run.final_state().values, &exact)
        })
        .collect();
    let order = global_fit(1.0, &ns, &errs);

    // autonomous generators: the rescaled steps telescope to (e^{tau B} e^{tau A})^n
    let a = dmatrix![-1.0, 0.3, 0.0; 0.2, -2.0, 0.5; 0.0, 0.1, -0.7];
    let b = dmatrix![0.0, 1.0, 0.0; -1.0, 0.0, 0.2; 0.3, 0.0, 0.1];
    let ga = MatrixGenerator::constant(a.clone()).expect("square");
    let gb = MatrixGenerator::constant(b.clone()).expect("square");
    let (s, t, n) = (0.3, 1.3, 20);
    let span = TimeSpan::new(s, t, n).expect("span");
    let x = State::new(vec![0.7, 0.1, -1.2], s);
    let rescaled = run_rescaled_sequential(
        &MatrixEvolution::new(ga.time_scaled(0.5)),
        &MatrixEvolution::new(gb.time_scaled(0.5)),
        &span,
        &x,
        Storage::Endpoints,
    )
    .expect("rescaled run");
    let tau = span.tau();
    let step = matrix_expm(&(b * tau)).expect("expm") * matrix_expm(&(a * tau)).expect("expm");
    let mut telescoped = DVector::from_column_slice(&x.values);
    for _ in 0..n {
        telescoped = &step * telescoped;
    }
    let gap = dist(&rescaled.final_state().values, telescoped.as_slice());
    outcome(
        order >= 0.9 && gap <= 1e-10,
        format!("subflow order {order:.4}, rescaled vs telescoped product {gap:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = MatrixInstance::random(&mut rng, 6, 0.5, 10.0, 1.0).expect("instance");
    let t = 1.0;
    let x = State::new((0..6).map(|i| 1.0 / (1.0 + i as f64)).collect(), 0.0);
    let exact = matrix_expm(&((&inst.a + &inst.b) * t)).expect("expm") * DVector::from_column_slice(&x.values);
    let fa = MatrixExpFlow::new(MatrixGenerator::constant(inst.a.clone()).expect("square"));
    let fb = MatrixExpFlow::new(MatrixGenerator::constant(inst.b.clone()).expect("square"));
    let ns = [8, 16, 32, 64, 128];
    let mut strang = Vec::new();
    let mut weighted = Vec::new();
    for &n in &ns {
        let span = TimeSpan::new(0.0, t, n).expect("span");
        let s = run_frozen_strang(&fa, &fb, &span, &x, Storage::Endpoints).expect("strang");
        let w = run_frozen_weighted(&fa, &fb, 0.5, &span, &x, Storage::Endpoints).expect("weighted");
        strang.push(dist(&s.final_state().values, exact.as_slice()));
        weighted.push(dist(&w.final_state().values, exact.as_slice()));
    }
    let (ps, pw) = (global_fit(t, &ns, &strang), global_fit(t, &ns, &weighted));
    outcome(
        !inst.commutes() && ps >= 1.8 && pw >= 1.8,
        format!("Strang order {ps:.4}, weighted(1/2) order {pw:.4}"),
    )
}

fn criterion_6(tmp: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs = 0;
    let mut exact = true;
    for intervals in 2..=120usize {
        let fine = make_grid(0.0, 1.0, intervals + 1).expect("grid");
        for coarse_intervals in (2..=intervals).filter(|c| intervals % c == 0) {
            let pair = make_injection_pair(&fine, coarse_intervals + 1).expect("nested");
            let w: Vec<f64> = (0..=coarse_intervals).map(|_| rng.random_range(-1e3..1e3)).collect();
            exact &= pair.restrict(&pair.interpolate(&w).expect("interp")).expect("restrict") == w;
            pairs += 1;
        }
    }
    let out = cmd_sweep(&preset_into(Preset::Paper83, tmp)).expect("sweep run");
    let slope = out.table.spatial_slope.unwrap_or(f64::NAN);
    outcome(
        exact && out.monotone_in_m && out.monotone_in_n && (slope - 2.0).abs() <= 0.3,
        format!(
            "P_m J_m = I_m bit-exact on {pairs} pairs: {exact}; monotone in m: {}, in n: {}; spatial slope {slope:.4}",
            out.monotone_in_m, out.monotone_in_n
        ),
    )
}

fn criterion_7() -> Outcome {
    let problem = PdeProblem::quadratic_well(201).expect("problem");
    let mut worst = f64::INFINITY;
    let mut passed = true;
    for n in [1, 10, 100] {
        let span = TimeSpan::new(0.0, 1e-2, n).expect("span");
        let r = pde_positivity(&problem, &span, DiffusionSubstep::Exact, 1e-12).expect("run");
        worst = worst.min(r.report.min_value);
        passed &= r.report.passed;
    }
    outcome(passed && worst >= -1e-12, format!("smallest stored value {worst:.3e} over n = 1, 10, 100"))
}

fn criterion_8() -> Outcome {
    // commuting autonomous generators
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = MatrixInstance::commuting(&mut rng, 5).expect("instance");
    let t = 0.8;
    let x = State::new(vec![1.0, 2.0, -1.0, 0.5, 0.0], 0.0);
    let exact = matrix_expm(&((&inst.a + &inst.b) * t)).expect("expm") * DVector::from_column_slice(&x.values);
    let ga = MatrixGenerator::constant(inst.a.clone()).expect("square");
    let gb = MatrixGenerator::constant(inst.b.clone()).expect("square");
    let (fa, fb) = (MatrixExpFlow::new(ga.clone()), MatrixExpFlow::new(gb.clone()));
    let (ea, eb) = (MatrixEvolution::new(ga.clone()), MatrixEvolution::new(gb.clone()));
    let (ra, rb) = (MatrixEvolution::new(ga.time_scaled(0.5)), MatrixEvolution::new(gb.time_scaled(0.5)));
    let span = TimeSpan::new(0.0, t, 16).expect("span");
    let finals: Vec<Vec<f64>> = vec![
        run_frozen_sequential(&fa, &fb, &span, &x, Storage::Endpoints).expect("run").into_final().values,
        run_frozen_strang(&fa, &fb, &span, &x, Storage::Endpoints).expect("run").into_final().values,
        run_frozen_weighted(&fa, &fb, 0.3, &span, &x, Storage::Endpoints).expect("run").into_final().values,
        run_subflow_sequential(&ea, &eb, &span, &x, Storage::Endpoints).expect("run").into_final().values,
        run_rescaled_sequential(&ra, &rb, &span, &x, Storage::Endpoints).expect("run").into_final().values,
    ];
    let worst_rel = finals
        .iter()
        .map(|f| dist(f, exact.as_slice()) / exact.norm())
        .fold(0.0, f64::max);

    // V = 0: the split step and the reference step are the same operations
    let grid = make_grid(0.0, 1.0, 101).expect("grid");
    let u0 = State::sampled(&grid, |x| (-50.0 * (x - 0.4f64).powi(2)).exp(), 0.0);
    let span = TimeSpan::new(0.0, 1e-2, 25).expect("span");
    let split = run_pde_sequential(&grid, &Potential::zero(), &u0, &span, Storage::Full).expect("split");
    let reference = run_reference(&grid, &Potential::zero(), &u0, &span, Storage::Full).expect("reference");
    let bitwise = split
        .trajectory
        .iter()
        .zip(&reference.trajectory)
        .all(|(a, b)| a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));

    // manufactured power laws
    let taus = [2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4];
    let mut fit_gap: f64 = 0.0;
    for (c, p) in [(1.0, 2.0), (5.0, 3.0), (0.3, 1.0), (12.0, 0.5)] {
        let entries = taus
            .iter()
            .map(|&tau| ErrorEntry {
                tau,
                error: c * f64::powf(tau, p),
                rel_error: c * f64::powf(tau, p),
            })
            .collect();
        let fit = fit_order(&ErrorSeries::new(entries, NormKind::DiscreteL2).expect("series"), OrderConvention::Global).expect("fit");
        fit_gap = fit_gap.max((fit.slope_a - p).abs());
    }
    outcome(
        worst_rel <= 1e-12 && bitwise && fit_gap <= 1e-10,
        format!("commuting schemes max rel error {worst_rel:.2e}; V = 0 bit-identical: {bitwise}; manufactured exponent gap {fit_gap:.2e}"),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("read"))
        })
        .collect();
    files.sort();
    files
}

fn criterion_9(tmp: &Path) -> Outcome {
    let mut identical = true;
    let mut count = 0;
    for run in ["order", "oracle", "solve", "sweep"] {
        let dirs = [tmp.join(format!("{run}_a")), tmp.join(format!("{run}_b"))];
        for d in &dirs {
            let mut cfg = preset_into(Preset::Paper83, d);
            if run == "sweep" {
                cfg.ms = vec![26, 51, 101];
                cfg.grid = 101;
                cfg.time = Some(nasplit::cli::TimeSteps::Counts(vec![10, 40, 160]));
            }
            match run {
                "order" => cmd_order(&cfg).map(|_| ()),
                "oracle" => cmd_oracle(&cfg).map(|_| ()),
                "solve" => cmd_solve(&cfg).map(|_| ()),
                _ => cmd_sweep(&cfg).map(|_| ()),
            }
            .expect("command run");
        }
        let (a, b) = (dir_bytes(&dirs[0]), dir_bytes(&dirs[1]));
        count += a.len();
        identical &= !a.is_empty() && a == b;
    }
    outcome(identical, format!("{count} output files compared byte-for-byte across two runs"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| tmp.path().join(name);
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(&str, Option<Duration>, Check)> = vec![
        ("order reproduction", Some(Duration::from_secs(30)), Box::new(|| criterion_1(&sub("c1")))),
        ("sequential rate on random matrices", Some(Duration::from_secs(10)), Box::new(|| criterion_2(&sub("c2")))),
        ("frozen product formula", Some(Duration::from_secs(5)), Box::new(criterion_3)),
        ("subflow and rescaled splitting", Some(Duration::from_secs(5)), Box::new(criterion_4)),
        ("Strang and weighted order", Some(Duration::from_secs(5)), Box::new(criterion_5)),
        ("spatial approximation sweep", Some(Duration::from_secs(60)), Box::new(|| criterion_6(&sub("c6")))),
        ("positivity with exact sub-steps", None, Box::new(criterion_7)),
        ("exactness invariants", None, Box::new(criterion_8)),
        ("determinism", None, Box::new(|| criterion_9(&sub("c9")))),
    ];
    let mut failures = 0;
    for (k, (name, budget, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = out.passed && in_time;
        failures += usize::from(!passed);
        let budget_note = budget.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {}: {} {name}: {} [{:.2}s{budget_note}]",
            k + 1,
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
