//! Acceptance suite. Every criterion runs regardless of earlier failures and
//! prints one `[PASS]` or `[FAIL]` line; the process exits nonzero if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{
    best_response, gradient_descent_minimizer, naive_quad, naive_rollout_cost, random_game,
};
use gmnash::compensator::CompensatorGains;
use gmnash::{
    evaluate_cost, nominal_rollout, optimal_gains, propagate_moments, quadratic_scaling_table,
    run_ensemble, solve_feedback_nash, stage_objective, sweep, Ar1Params, EnsembleStats, Execution,
    GameSpec, MomentSeries, Player, SweepRow,
};
use gmnash_cli::{cmd_sweep, with_threads, RunConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWEEP_RHO: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9];
const SWEEP_SIGMA0: [f64; 4] = [0.02, 0.04, 0.06, 0.08];
const SWEEP_TRIALS: usize = 500;
const MC_TRIALS: usize = 10_000;
const SEED: u64 = 20_251_016;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Suite {
    failures: usize,
    total: usize,
}

impl Suite {
    fn check(&mut self, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut out = f();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                out.pass = false;
                out.detail = format!("{}; runtime {elapsed:.2?} exceeds {limit:?}", out.detail);
            }
        }
        self.report(name, out, elapsed);
    }

    fn report(&mut self, name: &str, out: Outcome, elapsed: Duration) {
        self.total += 1;
        if !out.pass {
            self.failures += 1;
        }
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name} ({elapsed:.2?}): {}", out.detail);
    }
}

fn benchmark() -> (GameSpec, gmnash::NashSolution) {
    let spec = GameSpec::benchmark();
    let nash = solve_feedback_nash(&spec).expect("benchmark solves");
    (spec, nash)
}

fn moments_at(
    spec: &GameSpec,
    nash: &gmnash::NashSolution,
    rho: f64,
    sigma0: f64,
) -> (Ar1Params, MomentSeries) {
    let params = Ar1Params::new(rho, sigma0, spec.b2.ncols()).expect("valid params");
    let moments = propagate_moments(spec, nash, &params).expect("moments");
    (params, moments)
}

fn quadratic_scaling() -> Outcome {
    let (spec, nash) = benchmark();
    let grid = [0.15, 0.30, 0.45, 0.60];
    let expected = [1.0, 4.0, 9.0, 16.0];
    let mut worst: f64 = 0.0;
    for rho in [0.0, 0.5, 0.9] {
        let table = quadratic_scaling_table(&spec, &nash, rho, &grid).expect("table");
        for (row, want) in table.iter().zip(expected) {
            worst = worst.max((row.ratio_to_first - want).abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max |ratio - s^2| = {worst:e} (tol 1e-10)"),
    )
}

fn spectral_radius() -> Outcome {
    let (_, nash) = benchmark();
    let r = nash.max_spectral_radius;
    outcome(
        (0.34..=0.38).contains(&r),
        format!("max_k spectral radius = {r:.6}"),
    )
}

fn trace_ensemble() -> (MomentSeries, EnsembleStats) {
    let (spec, nash) = benchmark();
    let (params, moments) = moments_at(&spec, &nash, 0.5, 0.06);
    let gains = CompensatorGains::zero(spec.horizon, 3, 3, 0.5);
    let stats = run_ensemble(
        &spec,
        &nash,
        &gains,
        &params,
        MC_TRIALS,
        SEED,
        Execution::Parallel,
    )
    .expect("ensemble");
    (moments, stats)
}

fn analytic_vs_mc() -> Outcome {
    let (moments, stats) = trace_ensemble();
    let mc = stats.empirical_traces();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (&truth, &estimate) in moments.trace_sigma.iter().zip(&mc).skip(1) {
        if truth == 0.0 {
            ok &= estimate == 0.0;
            continue;
        }
        worst = worst.max((estimate - truth).abs() / truth);
    }
    outcome(
        ok && worst < 0.05,
        format!("max relative error over k = 1..9 is {worst:.4} (tol 0.05, M = {MC_TRIALS})"),
    )
}

fn zero_mean() -> Outcome {
    let (_, stats) = trace_ensemble();
    let m = stats.trials as f64;
    let n = stats.empirical_mean_dx[0].len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let sd = stats
            .empirical_sigma
            .iter()
            .map(|s| s[(i, i)].max(0.0).sqrt())
            .fold(0.0, f64::max);
        let bound = 4.0 * sd / m.sqrt();
        for mean in &stats.empirical_mean_dx {
            let ratio = if bound > 0.0 {
                mean[i].abs() / bound
            } else {
                mean[i].abs()
            };
            worst = worst.max(ratio);
        }
    }
    outcome(
        worst <= 1.0,
        format!("max |mean| / (4 sd / sqrt M) = {worst:.4} (must be <= 1)"),
    )
}

fn compensator_optimality() -> Outcome {
    let (spec, nash) = benchmark();
    let (params, moments) = moments_at(&spec, &nash, 0.5, 0.06);
    let gains = optimal_gains(&nash, &moments, &params).expect("gains");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut beaten = 0usize;
    let mut worst_gap: f64 = 0.0;
    for k in 2..spec.horizon {
        let star = &gains.gains[k];
        let best = stage_objective(&spec, &nash, &moments, &params, star, k).expect("objective");
        let scale = star.amax().max(1e-3);
        for _ in 0..1000 {
            let spread = scale * 10f64.powf(rng.random_range(-3.0..1.0));
            let l =
                star + DMatrix::from_fn(3, 3, |_, _| spread * (rng.random::<f64>() * 2.0 - 1.0));
            let v = stage_objective(&spec, &nash, &moments, &params, &l, k).expect("objective");
            if v < best {
                beaten += 1;
            }
        }
        let psi = &moments.phi[k - 1] * 0.25;
        let oracle = gradient_descent_minimizer(&spec.r1, &nash.k1[k], &moments.cross[k], &psi);
        worst_gap = worst_gap.max((&oracle - star).amax());
    }
    outcome(
        beaten == 0 && worst_gap <= 1e-6,
        format!(
            "random L beating L*: {beaten}/7000; max |L* - minimizer| = {worst_gap:e} (tol 1e-6)"
        ),
    )
}

fn run_sweep() -> (Vec<SweepRow>, Duration) {
    let mut spec = GameSpec::benchmark();
    spec.x0 = DVector::zeros(3);
    let start = Instant::now();
    let rows = sweep(
        &spec,
        &SWEEP_RHO,
        &SWEEP_SIGMA0,
        SWEEP_TRIALS,
        SEED,
        Execution::Parallel,
    )
    .expect("sweep");
    (rows, start.elapsed())
}

fn sweep_zero_at_white_noise(rows: &[SweepRow]) -> Outcome {
    let cells: Vec<f64> = rows
        .iter()
        .filter(|r| r.rho == 0.0)
        .map(|r| r.stats.mean_reduction)
        .collect();
    outcome(
        cells.iter().all(|&v| v == 0.0),
        format!("reductions at rho = 0: {cells:?}"),
    )
}

fn sweep_positive_reduction(rows: &[SweepRow]) -> Outcome {
    let mut bad = Vec::new();
    for r in rows.iter().filter(|r| r.rho > 0.0) {
        let s = &r.stats;
        let lower_ok = s.mean_reduction >= -s.reduction_halfwidth;
        let strict_ok = r.rho < 0.4 || s.mean_reduction > s.reduction_halfwidth;
        if !(lower_ok && strict_ok) {
            bad.push(format!(
                "({}, {}): {:.3e} +/- {:.3e}",
                r.rho, r.sigma0, s.mean_reduction, s.reduction_halfwidth
            ));
        }
    }
    let detail = if bad.is_empty() {
        "all cells within the required sign band".to_string()
    } else {
        format!("{} of 20 cells violate: {}", bad.len(), bad.join("; "))
    };
    outcome(bad.is_empty(), detail)
}

fn sweep_modest_relative(rows: &[SweepRow]) -> Outcome {
    let worst = rows
        .iter()
        .map(|r| r.stats.relative_reduction().abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 0.05,
        format!(
            "max |relative reduction| = {:.2}% (must be < 5%)",
            worst * 100.0
        ),
    )
}

fn sweep_peak_location(rows: &[SweepRow]) -> Outcome {
    let mut peaks = Vec::new();
    for &sigma0 in &SWEEP_SIGMA0 {
        let best = rows
            .iter()
            .filter(|r| r.sigma0 == sigma0)
            .max_by(|a, b| a.stats.mean_reduction.total_cmp(&b.stats.mean_reduction))
            .expect("nonempty column");
        peaks.push((sigma0, best.rho));
    }
    let ok = peaks.iter().all(|&(_, rho)| rho == 0.8 || rho == 0.9);
    outcome(
        ok,
        format!("argmax rho per sigma0: {peaks:?} (must lie in {{0.8, 0.9}})"),
    )
}

fn sweep_certificate(rows: &[SweepRow]) -> Outcome {
    let applicable: Vec<&SweepRow> = rows.iter().filter(|r| r.certificate.valid).collect();
    let violations = applicable.iter().filter(|r| !r.certificate.holds).count();
    let headroom = applicable
        .iter()
        .map(|r| r.certificate.observed_sup_norm / r.certificate.bound)
        .fold(0.0, f64::max);
    outcome(
        !applicable.is_empty() && violations == 0,
        format!(
            "{} cells with beta < 1, {violations} violations, max sup||Sigma|| / (C2 sigma0^2) = {headroom:.3}",
            applicable.len()
        ),
    )
}

fn exact_doubling() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for seed in 0..10 {
        let spec = random_game(seed);
        let nash = solve_feedback_nash(&spec).expect("random game solves");
        let m2 = spec.b2.ncols();
        let rho = 0.1 + 0.08 * seed as f64;
        let one = propagate_moments(&spec, &nash, &Ar1Params::new(rho, 0.37, m2).unwrap()).unwrap();
        let two = propagate_moments(&spec, &nash, &Ar1Params::new(rho, 0.74, m2).unwrap()).unwrap();
        let pairs = one
            .sigma
            .iter()
            .zip(&two.sigma)
            .chain(one.cross.iter().zip(&two.cross));
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(b.iter()) {
                let want = 4.0 * x;
                if want == 0.0 {
                    exact &= *y == 0.0;
                } else {
                    worst = worst.max((y - want).abs() / want.abs());
                }
            }
        }
    }
    outcome(
        exact && worst <= 1e-12,
        format!("max elementwise relative error = {worst:e} (tol 1e-12) over 10 random games"),
    )
}

fn nash_correctness() -> Outcome {
    let gap = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).amax())
            .fold(0.0, f64::max)
    };
    let bench = GameSpec::benchmark().with_x0(DVector::from_vec(vec![1.0, -0.5, 0.25]));
    let mut worst_gain: f64 = 0.0;
    let mut worst_cost: f64 = 0.0;
    for spec in std::iter::once(bench).chain((0..10).map(random_game)) {
        let nash = solve_feedback_nash(&spec).expect("solves");
        worst_gain = worst_gain
            .max(gap(&best_response(&spec, &nash.k2, 1), &nash.k1))
            .max(gap(&best_response(&spec, &nash.k1, 2), &nash.k2));
        let traj = nominal_rollout(&spec, &nash).expect("rollout");
        for (player, tag, p0) in [
            (Player::One, 1u8, &nash.p1[0]),
            (Player::Two, 2u8, &nash.p2[0]),
        ] {
            let value = naive_quad(p0, &spec.x0);
            let cost = evaluate_cost(&traj, &spec, player).expect("cost");
            let naive = naive_rollout_cost(&spec, &nash.k1, &nash.k2, tag);
            let scale = value.abs().max(1.0);
            worst_cost = worst_cost
                .max((cost - value).abs() / scale)
                .max((naive - value).abs() / scale);
        }
    }
    outcome(
        worst_gain <= 1e-8 && worst_cost <= 1e-8,
        format!(
            "max gain gap = {worst_gain:e}, max cost gap = {worst_cost:e} (tol 1e-8, 11 games)"
        ),
    )
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    ["sweep.csv", "sigma_trace.csv", "deltax_samples.csv"]
        .iter()
        .map(|f| {
            (
                f.to_string(),
                std::fs::read(dir.join(f)).expect("output exists"),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let config = RunConfig::default();
    let threads = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .max(4);
    let root = tempfile::tempdir().expect("tempdir");
    let mut runs = Vec::new();
    for (label, t) in [("1", 1), ("T", threads), ("T again", threads)] {
        let dir = root.path().join(label);
        with_threads(Some(t), || cmd_sweep(&config, &dir, Execution::Parallel))
            .expect("thread pool")
            .expect("sweep runs");
        runs.push(read_outputs(&dir));
    }
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        identical,
        format!("sweep.csv, sigma_trace.csv, deltax_samples.csv identical across 1, {threads}, {threads} threads"),
    )
}

fn main() {
    let mut suite = Suite {
        failures: 0,
        total: 0,
    };
    suite.check(
        "quadratic sigma0 scaling of max_k tr(Sigma_k)",
        Some(Duration::from_secs(1)),
        quadratic_scaling,
    );
    suite.check(
        "spectral radius diagnostic in [0.34, 0.38]",
        Some(Duration::from_secs(1)),
        spectral_radius,
    );
    suite.check(
        "analytic vs Monte Carlo trace at (0.06, 0.5)",
        Some(Duration::from_secs(30)),
        analytic_vs_mc,
    );
    suite.check(
        "zero-mean deviation states",
        Some(Duration::from_secs(30)),
        zero_mean,
    );
    suite.check(
        "compensator optimality for k >= 2",
        Some(Duration::from_secs(10)),
        compensator_optimality,
    );

    let (rows, elapsed) = run_sweep();
    let limit = Duration::from_secs(300);
    let timed = |out: Outcome| {
        if elapsed > limit {
            outcome(
                false,
                format!(
                    "{}; sweep runtime {elapsed:.2?} exceeds {limit:?}",
                    out.detail
                ),
            )
        } else {
            out
        }
    };
    suite.report(
        "sweep (a): zero reduction at rho = 0",
        timed(sweep_zero_at_white_noise(&rows)),
        elapsed,
    );
    suite.report(
        "sweep (b): reduction sign band",
        timed(sweep_positive_reduction(&rows)),
        elapsed,
    );
    suite.report(
        "sweep (c): relative reduction below 5%",
        timed(sweep_modest_relative(&rows)),
        elapsed,
    );
    suite.report(
        "sweep (d): peak reduction at rho in {0.8, 0.9}",
        timed(sweep_peak_location(&rows)),
        elapsed,
    );
    suite.report(
        "boundedness certificate on sweep cells",
        timed(sweep_certificate(&rows)),
        elapsed,
    );

    suite.check(
        "exact 2x sigma0 scaling of Sigma and C",
        None,
        exact_doubling,
    );
    suite.check(
        "Nash correctness against best-response oracle",
        None,
        nash_correctness,
    );
    suite.check(
        "byte-identical sweep outputs across thread counts",
        None,
        determinism,
    );

    println!(
        "acceptance: {} passed, {} failed, {} total",
        suite.total - suite.failures,
        suite.failures,
        suite.total
    );
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
