//! The three subcommands. Each writes a fixed set of files into `out`.

use std::path::Path;

use gmnash::linalg::spectral_norm;
use gmnash::{
    bound_certificate, check_assumptions, nominal_rollout, optimal_gains, propagate_moments,
    quadratic_scaling_table, run_trials, solve_feedback_nash, sweep, Ar1Params, EnsembleStats,
    Execution, GameSpec,
};
use nalgebra::DVector;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{matrix_rows, num, write_csv, write_key_values};

const MATRIX_HEADER: [&str; 5] = ["stage", "matrix_name", "row", "col", "value"];

fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Deviation experiments start from the origin.
fn deviation_game(config: &RunConfig) -> Result<GameSpec, CliError> {
    let spec = config.game_spec()?;
    let n = spec.state_dim();
    Ok(spec.with_x0(DVector::zeros(n)))
}

/// `gains.csv`, `riccati.csv`, `trajectory.csv`, `diagnostics.txt`.
pub fn cmd_nash(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = config.game_spec()?;
    let nash = solve_feedback_nash(&spec)?;
    let report = check_assumptions(&spec, &nash);
    let traj = nominal_rollout(&spec, &nash)?;
    prepare(out)?;

    let mut gains = matrix_rows("K1", &nash.k1);
    gains.extend(matrix_rows("K2", &nash.k2));
    write_csv(&out.join("gains.csv"), &MATRIX_HEADER, gains)?;

    let mut riccati = matrix_rows("P1", &nash.p1);
    riccati.extend(matrix_rows("P2", &nash.p2));
    write_csv(&out.join("riccati.csv"), &MATRIX_HEADER, riccati)?;

    let mut rows = Vec::new();
    for (signal, series) in [("x", &traj.states), ("u1", &traj.u1), ("u2", &traj.u2)] {
        for (k, v) in series.iter().enumerate() {
            for (i, value) in v.iter().enumerate() {
                rows.push(vec![
                    k.to_string(),
                    signal.to_string(),
                    i.to_string(),
                    num(*value),
                ]);
            }
        }
    }
    write_csv(
        &out.join("trajectory.csv"),
        &["k", "signal", "component", "value"],
        rows,
    )?;

    let margins: Vec<String> = report
        .stage_invertibility_margins
        .iter()
        .map(|&v| num(v))
        .collect();
    write_key_values(
        &out.join("diagnostics.txt"),
        &[
            ("horizon", spec.horizon.to_string()),
            ("state_dim", report.state_dim.to_string()),
            ("max_spectral_radius", num(nash.max_spectral_radius)),
            ("schur_stable", report.schur_stable.to_string()),
            ("max_spectral_norm", num(nash.max_spectral_norm)),
            ("beta_below_one", report.beta_below_one.to_string()),
            (
                "min_stage_solve_conditioning",
                num(nash.min_stage_solve_conditioning),
            ),
            (
                "controllability_rank",
                report.controllability_rank.to_string(),
            ),
            ("controllable", report.controllable.to_string()),
            (
                "min_invertibility_margin",
                num(report.min_invertibility_margin),
            ),
            ("stage_invertibility_margins", margins.join(",")),
        ],
    )
}

/// `moments.csv`, `bounds.txt`, `table1.csv`, `rho_scan.csv`.
///
/// `moments.csv` and `bounds.txt` describe the baseline (first) `σ₀`.
/// `rho_scan.csv` lists `max_k tr(Σ_k)` at the baseline `σ₀` for
/// `ρ = 0, 0.01, …, 0.99`.
pub fn cmd_moments(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let spec = deviation_game(config)?;
    let (rho, sigma0_grid) = config.moments_setting()?;
    let nash = solve_feedback_nash(&spec)?;
    let m2 = spec.b2.ncols();
    let table = quadratic_scaling_table(&spec, &nash, rho, &sigma0_grid)?;
    let baseline = sigma0_grid[0];
    let params = Ar1Params::new(rho, baseline, m2)?;
    let moments = propagate_moments(&spec, &nash, &params)?;
    let cert = bound_certificate(&spec, &nash, &params, &moments);
    prepare(out)?;

    write_csv(
        &out.join("table1.csv"),
        &["sigma0", "max_trace_Sigma", "ratio_to_baseline"],
        table
            .iter()
            .map(|r| vec![num(r.sigma0), num(r.max_trace_sigma), num(r.ratio_to_first)]),
    )?;

    write_csv(
        &out.join("moments.csv"),
        &["k", "trace_Sigma", "spectral_norm_Sigma", "frobenius_C"],
        (0..moments.sigma.len()).map(|k| {
            vec![
                k.to_string(),
                num(moments.trace_sigma[k]),
                num(spectral_norm(&moments.sigma[k])),
                num(moments.cross[k].norm()),
            ]
        }),
    )?;

    let scan: Vec<Vec<String>> = (0..100)
        .map(|i| -> Result<Vec<String>, CliError> {
            let r = i as f64 / 100.0;
            let p = Ar1Params::new(r, baseline, m2)?;
            let peak = propagate_moments(&spec, &nash, &p)?.max_trace();
            Ok(vec![num(r), num(baseline), num(peak)])
        })
        .collect::<Result<_, _>>()?;
    write_csv(
        &out.join("rho_scan.csv"),
        &["rho", "sigma0", "max_trace_Sigma"],
        scan,
    )?;

    write_key_values(
        &out.join("bounds.txt"),
        &[
            ("rho", num(rho)),
            ("sigma0", num(baseline)),
            ("c", num(cert.c)),
            ("beta", num(cert.beta)),
            ("C1", num(cert.c1)),
            ("C2", num(cert.c2)),
            ("valid", cert.valid.to_string()),
            (
                "reason",
                cert.reason.clone().unwrap_or_else(|| "none".into()),
            ),
            ("bound_C2_sigma0_sq", num(cert.bound)),
            ("sup_spectral_norm_Sigma", num(cert.observed_sup_norm)),
            ("sup_trace_Sigma", num(cert.observed_sup_trace)),
            ("bound_holds", cert.holds.to_string()),
        ],
    )
}

pub const SWEEP_HEADER: [&str; 14] = [
    "rho",
    "sigma0",
    "mean_J1_uncomp",
    "mean_J1_comp",
    "reduction",
    "halfwidth",
    "M",
    "base_seed",
    "comp_minus_uncomp",
    "relative_reduction",
    "predicted_reduction",
    "analytic_max_trace",
    "bound_C2_sigma0_sq",
    "bound_holds",
];

/// `sweep.csv`, `sigma_trace.csv`, `deltax_samples.csv`.
///
/// `reduction` is `mean(J̃₁ − J₁)` (uncompensated minus compensated);
/// `comp_minus_uncomp` is the opposite ordering.
pub fn cmd_sweep(config: &RunConfig, out: &Path, execution: Execution) -> Result<(), CliError> {
    config.validate_mc()?;
    let spec = deviation_game(config)?;
    let (rho_grid, sigma0_grid) = config.sweep_grids()?;
    let (trace_rho, trace_sigma0) = config.trace_point()?;
    let mc = &config.mc;
    let seed = mc.base_seed;

    let rows = sweep(&spec, &rho_grid, &sigma0_grid, mc.trials, seed, execution)?;

    let nash = solve_feedback_nash(&spec)?;
    let params = Ar1Params::new(trace_rho, trace_sigma0, spec.b2.ncols())?;
    let moments = propagate_moments(&spec, &nash, &params)?;
    let gains = optimal_gains(&nash, &moments, &params)?;
    let trials = run_trials(
        &spec,
        &nash,
        &gains,
        &params,
        mc.trace_trials,
        seed,
        execution,
    )?;
    let stats = EnsembleStats::from_trials(&trials)?;
    prepare(out)?;

    write_csv(
        &out.join("sweep.csv"),
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            let s = &r.stats;
            vec![
                num(r.rho),
                num(r.sigma0),
                num(s.mean_j1_uncomp),
                num(s.mean_j1_comp),
                num(s.mean_reduction),
                num(s.reduction_halfwidth),
                s.trials.to_string(),
                seed.to_string(),
                num(s.mean_comp_minus_uncomp()),
                num(s.relative_reduction()),
                num(r.predicted_reduction),
                num(r.analytic_max_trace),
                num(r.certificate.bound),
                r.certificate.holds.to_string(),
            ]
        }),
    )?;

    let mc_trace = stats.empirical_traces();
    let meta = |row: &mut Vec<String>| {
        row.extend([
            num(trace_rho),
            num(trace_sigma0),
            stats.trials.to_string(),
            seed.to_string(),
        ]);
    };
    write_csv(
        &out.join("sigma_trace.csv"),
        &[
            "k",
            "analytic_trace",
            "mc_trace",
            "rho",
            "sigma0",
            "M",
            "base_seed",
        ],
        (0..mc_trace.len()).map(|k| {
            let mut row = vec![k.to_string(), num(moments.trace_sigma[k]), num(mc_trace[k])];
            meta(&mut row);
            row
        }),
    )?;

    let mut samples = Vec::new();
    for (t, trial) in trials.iter().take(mc.deltax_trials).enumerate() {
        for (k, dx) in trial.dx_path.iter().enumerate() {
            for (i, v) in dx.iter().enumerate() {
                let mut row = vec![t.to_string(), k.to_string(), i.to_string(), num(*v)];
                meta(&mut row);
                samples.push(row);
            }
        }
    }
    write_csv(
        &out.join("deltax_samples.csv"),
        &[
            "trial",
            "k",
            "component",
            "value",
            "rho",
            "sigma0",
            "M",
            "base_seed",
        ],
        samples,
    )
}

/// Run `f` inside a rayon pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    if threads == Some(0) {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    Ok(f())
}
