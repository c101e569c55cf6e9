//! Paired Monte Carlo evaluation of the nominal and predictive policies.
//!
//! Every trial samples one deviation path and drives three loops with it:
//! the nominal Nash loop (no deviation), the perturbed loop where Player 1
//! keeps playing `−K₁x`, and the perturbed loop where Player 1 adds the
//! predictive feedforward. Trial `i` always uses the stream
//! [`trial_seed`]`(base_seed, i)` and results are reduced in trial order, so
//! sequential and parallel runs agree bit for bit.

use nalgebra::{DMatrix, DVector};

use crate::compensator::{apply_policy, optimal_gains, predicted_reduction, CompensatorGains};
use crate::deviation::{sample_path, trial_seed, Ar1Params};
use crate::error::{Error, Result};
use crate::game::{evaluate_cost, solve_feedback_nash, GameSpec, NashSolution, Player, Trajectory};
use crate::moments::{bound_certificate, propagate_moments, BoundCertificate};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon when the `parallel` feature is on, sequential otherwise.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub j1_compensated: f64,
    pub j1_uncompensated: f64,
    pub j2_compensated: f64,
    pub j2_uncompensated: f64,
    pub deviation_path_seed: u64,
    /// Seed of the path the compensated loop saw; equal to
    /// `deviation_path_seed` by construction.
    pub compensated_path_seed: u64,
    /// `Δx_k` of the uncompensated loop relative to the nominal rollout.
    pub dx_path: Vec<DVector<f64>>,
}

impl TrialResult {
    /// `J̃₁ − J₁`: positive when the compensator lowered Player 1's cost.
    pub fn reduction(&self) -> f64 {
        self.j1_uncompensated - self.j1_compensated
    }
}

fn check_inputs(
    spec: &GameSpec,
    nash: &NashSolution,
    gains: &CompensatorGains,
    params: &Ar1Params,
) -> Result<()> {
    if nash.horizon() != spec.horizon || gains.horizon() != spec.horizon {
        return Err(Error::dims("gain horizons do not match the game"));
    }
    if params.channels() != spec.b2.ncols() {
        return Err(Error::dims("deviation channels do not match B2"));
    }
    if gains.rho != params.rho() {
        return Err(Error::InvalidParams(format!(
            "compensator was built for rho = {}, trial uses {}",
            gains.rho,
            params.rho()
        )));
    }
    Ok(())
}

pub fn run_trial(
    spec: &GameSpec,
    nash: &NashSolution,
    gains: &CompensatorGains,
    params: &Ar1Params,
    seed: u64,
) -> Result<TrialResult> {
    check_inputs(spec, nash, gains, params)?;
    let horizon = spec.horizon;
    let path = sample_path(params, horizon, seed)?;
    let (a, b1, b2) = (&spec.a, &spec.b1, &spec.b2);
    let no_deviation = DVector::zeros(params.channels());

    let mut nominal = spec.x0.clone();
    let mut plain = Trajectory {
        states: vec![spec.x0.clone()],
        u1: Vec::with_capacity(horizon),
        u2: Vec::with_capacity(horizon),
    };
    let mut comp = plain.clone();
    let mut dx_path = Vec::with_capacity(horizon + 1);
    dx_path.push(DVector::zeros(spec.state_dim()));

    for k in 0..horizon {
        let dev = &path.values[k];
        let prev = if k == 0 {
            &no_deviation
        } else {
            &path.values[k - 1]
        };

        let x = &plain.states[k];
        let u1 = -(&nash.k1[k] * x);
        let u2 = -(&nash.k2[k] * x) + dev;
        let next = a * x + b1 * &u1 + b2 * &u2;
        plain.u1.push(u1);
        plain.u2.push(u2);
        plain.states.push(next);

        let x = &comp.states[k];
        let u1 = apply_policy(nash, gains, x, prev, k)?;
        let u2 = -(&nash.k2[k] * x) + dev;
        let next = a * x + b1 * &u1 + b2 * &u2;
        comp.u1.push(u1);
        comp.u2.push(u2);
        comp.states.push(next);

        nominal = &nash.acl[k] * nominal;
        dx_path.push(&plain.states[k + 1] - &nominal);
    }

    Ok(TrialResult {
        j1_compensated: evaluate_cost(&comp, spec, Player::One)?,
        j1_uncompensated: evaluate_cost(&plain, spec, Player::One)?,
        j2_compensated: evaluate_cost(&comp, spec, Player::Two)?,
        j2_uncompensated: evaluate_cost(&plain, spec, Player::Two)?,
        deviation_path_seed: path.seed,
        compensated_path_seed: path.seed,
        dx_path,
    })
}

/// Trials `0..count` in index order.
pub fn run_trials(
    spec: &GameSpec,
    nash: &NashSolution,
    gains: &CompensatorGains,
    params: &Ar1Params,
    count: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<TrialResult>> {
    if count == 0 {
        return Err(Error::InvalidParams(
            "trial count must be at least 1".into(),
        ));
    }
    check_inputs(spec, nash, gains, params)?;
    let one = |i: usize| run_trial(spec, nash, gains, params, trial_seed(base_seed, i as u64));
    match execution {
        Execution::Sequential => (0..count).map(one).collect(),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(one).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..count).map(one).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub trials: usize,
    pub mean_j1_comp: f64,
    pub mean_j1_uncomp: f64,
    pub mean_j2_comp: f64,
    /// Mean of paired `J̃₁ − J₁` (uncompensated minus compensated).
    pub mean_reduction: f64,
    /// Sample standard deviation of the paired differences; NaN for one trial.
    pub reduction_std: f64,
    /// 95% normal-approximation half-width of `mean_reduction`; NaN when
    /// `halfwidth_defined` is false.
    pub reduction_halfwidth: f64,
    pub halfwidth_defined: bool,
    /// `(1/M) Σ Δx_k Δx_kᵀ`.
    pub empirical_sigma: Vec<DMatrix<f64>>,
    pub empirical_mean_dx: Vec<DVector<f64>>,
}

impl EnsembleStats {
    pub fn from_trials(trials: &[TrialResult]) -> Result<Self> {
        let Some(first) = trials.first() else {
            return Err(Error::InvalidParams("no trials to aggregate".into()));
        };
        let count = trials.len();
        let mf = count as f64;
        let stages = first.dx_path.len();
        let n = first.dx_path[0].len();

        let mut sum_j1c = 0.0;
        let mut sum_j1u = 0.0;
        let mut sum_j2c = 0.0;
        let mut sum_red = 0.0;
        let mut sigma = vec![DMatrix::zeros(n, n); stages];
        let mut mean_dx = vec![DVector::zeros(n); stages];
        for t in trials {
            if t.dx_path.len() != stages {
                return Err(Error::dims("trials have different horizons"));
            }
            sum_j1c += t.j1_compensated;
            sum_j1u += t.j1_uncompensated;
            sum_j2c += t.j2_compensated;
            sum_red += t.reduction();
            for (k, dx) in t.dx_path.iter().enumerate() {
                sigma[k] += dx * dx.transpose();
                mean_dx[k] += dx;
            }
        }
        let mean_reduction = sum_red / mf;
        for s in &mut sigma {
            *s /= mf;
        }
        for m in &mut mean_dx {
            *m /= mf;
        }

        let (reduction_std, reduction_halfwidth, halfwidth_defined) = if count > 1 {
            let ss: f64 = trials
                .iter()
                .map(|t| (t.reduction() - mean_reduction).powi(2))
                .sum();
            let sd = (ss / (mf - 1.0)).sqrt();
            (sd, Z_95 * sd / mf.sqrt(), true)
        } else {
            (f64::NAN, f64::NAN, false)
        };

        Ok(EnsembleStats {
            trials: count,
            mean_j1_comp: sum_j1c / mf,
            mean_j1_uncomp: sum_j1u / mf,
            mean_j2_comp: sum_j2c / mf,
            mean_reduction,
            reduction_std,
            reduction_halfwidth,
            halfwidth_defined,
            empirical_sigma: sigma,
            empirical_mean_dx: mean_dx,
        })
    }

    /// `J₁ − J̃₁` (compensated minus uncompensated), the opposite ordering
    /// of [`Self::mean_reduction`].
    pub fn mean_comp_minus_uncomp(&self) -> f64 {
        -self.mean_reduction
    }

    pub fn relative_reduction(&self) -> f64 {
        self.mean_reduction / self.mean_j1_uncomp
    }

    pub fn empirical_traces(&self) -> Vec<f64> {
        self.empirical_sigma.iter().map(|s| s.trace()).collect()
    }
}

pub fn run_ensemble(
    spec: &GameSpec,
    nash: &NashSolution,
    gains: &CompensatorGains,
    params: &Ar1Params,
    count: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<EnsembleStats> {
    let trials = run_trials(spec, nash, gains, params, count, base_seed, execution)?;
    EnsembleStats::from_trials(&trials)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub sigma0: f64,
    pub stats: EnsembleStats,
    pub certificate: BoundCertificate,
    pub analytic_max_trace: f64,
    /// Reduction predicted by the frozen-moment objective.
    pub predicted_reduction: f64,
}

/// One paired ensemble per `(ρ, σ₀)` grid cell, `ρ` outermost. All cells
/// share `base_seed`, so neighbouring cells see the same innovations.
pub fn sweep(
    spec: &GameSpec,
    rho_grid: &[f64],
    sigma0_grid: &[f64],
    count: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    if rho_grid.is_empty() || sigma0_grid.is_empty() {
        return Err(Error::InvalidParams("sweep grids must be nonempty".into()));
    }
    let nash = solve_feedback_nash(spec)?;
    let m2 = spec.b2.ncols();
    let mut rows = Vec::with_capacity(rho_grid.len() * sigma0_grid.len());
    for &rho in rho_grid {
        for &sigma0 in sigma0_grid {
            let cell = || -> Result<SweepRow> {
                let params = Ar1Params::new(rho, sigma0, m2)?;
                let moments = propagate_moments(spec, &nash, &params)?;
                let gains = optimal_gains(&nash, &moments, &params)?;
                let stats =
                    run_ensemble(spec, &nash, &gains, &params, count, base_seed, execution)?;
                Ok(SweepRow {
                    rho,
                    sigma0,
                    certificate: bound_certificate(spec, &nash, &params, &moments),
                    analytic_max_trace: moments.max_trace(),
                    predicted_reduction: predicted_reduction(
                        spec, &nash, &moments, &params, &gains,
                    )?,
                    stats,
                })
            };
            rows.push(cell().map_err(|e| Error::Cell {
                rho,
                sigma0,
                source: Box::new(e),
            })?);
        }
    }
    Ok(rows)
}
