//! Finite-horizon two-player LQ feedback Nash games with a Gauss–Markov
//! (AR(1)) execution deviation on Player 2's input.
//!
//! The crate is organised bottom-up:
//!
//! * [`game`] solves the coupled Riccati recursion and evaluates costs.
//! * [`deviation`] samples AR(1) deviation paths and gives their exact
//!   covariances.
//! * [`moments`] propagates the state covariance `Σ_k` and the
//!   state/deviation cross-covariance `C_k` through the perturbed loop and
//!   certifies their `O(σ₀²)` bound.
//! * [`compensator`] computes Player 1's predictive feedforward gains.
//! * [`harness`] runs paired Monte Carlo ensembles and parameter sweeps.
//!
//! With the default `parallel` feature, Monte Carlo trials are distributed
//! with rayon. Results are bit-identical to the sequential path because each
//! trial owns a derived random stream and aggregation happens in trial order.

pub mod compensator;
pub mod deviation;
pub mod error;
pub mod game;
pub mod harness;
pub mod linalg;
pub mod moments;

pub use compensator::{apply_policy, optimal_gains, stage_objective, CompensatorGains};
pub use deviation::{phi_cross, phi_marginal, sample_path, trial_seed, Ar1Params, DeviationPath};
pub use error::{Error, Result};
pub use game::{
    check_assumptions, evaluate_cost, nominal_rollout, solve_feedback_nash, DiagnosticsReport,
    GameSpec, NashSolution, Player, Trajectory,
};
pub use harness::{
    run_ensemble, run_trial, run_trials, sweep, EnsembleStats, Execution, SweepRow, TrialResult,
};
pub use moments::{
    bound_certificate, propagate_moments, quadratic_scaling_table, BoundCertificate, MomentSeries,
    ScalingRow,
};
