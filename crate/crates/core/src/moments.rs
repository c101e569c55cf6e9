//! Exact second moments of the uncompensated perturbed loop
//! `Δx_{k+1} = A_cl,k Δx_k + B₂ Δu_k`, `Δx_0 = 0`.

use nalgebra::DMatrix;

use crate::deviation::{phi_marginal, Ar1Params};
use crate::error::{Error, Result};
use crate::game::{GameSpec, NashSolution};
use crate::linalg::{spectral_norm, symmetrize};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    /// `Σ_k = E[Δx_k Δx_kᵀ]`, `k = 0..=N`.
    pub sigma: Vec<DMatrix<f64>>,
    /// `C_k = E[Δx_k Δu_kᵀ]`, `k = 0..=N`.
    pub cross: Vec<DMatrix<f64>>,
    /// `Φ_k = E[Δu_k Δu_kᵀ]`, `k = 0..=N`.
    pub phi: Vec<DMatrix<f64>>,
    pub trace_sigma: Vec<f64>,
}

impl MomentSeries {
    pub fn max_trace(&self) -> f64 {
        self.trace_sigma.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_spectral_norm(&self) -> f64 {
        self.sigma.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// Runs
///
/// ```text
/// Σ_{k+1} = A Σ_k Aᵀ + B₂Φ_kB₂ᵀ + A C_k B₂ᵀ + B₂ C_kᵀ Aᵀ
/// C_{k+1} = ρ A C_k + ρ B₂ Φ_k
/// ```
///
/// with `A = A_cl,k` and `Φ_k` from the closed form.
pub fn propagate_moments(
    spec: &GameSpec,
    nash: &NashSolution,
    params: &Ar1Params,
) -> Result<MomentSeries> {
    let n = spec.state_dim();
    let m2 = spec.b2.ncols();
    if params.channels() != m2 {
        return Err(Error::dims(format!(
            "deviation has {} channels but B2 has {m2} columns",
            params.channels()
        )));
    }
    if nash.horizon() < spec.horizon || nash.acl.iter().any(|a| a.shape() != (n, n)) {
        return Err(Error::dims("closed-loop matrices do not cover the horizon"));
    }
    let horizon = spec.horizon;
    let rho = params.rho();
    let b2 = &spec.b2;

    let phi: Vec<DMatrix<f64>> = (0..=horizon).map(|k| phi_marginal(params, k)).collect();
    let mut sigma = Vec::with_capacity(horizon + 1);
    let mut cross = Vec::with_capacity(horizon + 1);
    sigma.push(DMatrix::zeros(n, n));
    cross.push(DMatrix::zeros(n, m2));

    for k in 0..horizon {
        let a = &nash.acl[k];
        let (s, c) = (&sigma[k], &cross[k]);
        let a_c_b2t = a * c * b2.transpose();
        let mut next_sigma =
            a * s * a.transpose() + b2 * &phi[k] * b2.transpose() + &a_c_b2t + a_c_b2t.transpose();
        symmetrize(&mut next_sigma);
        let next_cross = (a * c + b2 * &phi[k]) * rho;
        sigma.push(next_sigma);
        cross.push(next_cross);
    }
    let trace_sigma = sigma.iter().map(|s| s.trace()).collect();
    Ok(MomentSeries {
        sigma,
        cross,
        phi,
        trace_sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub sigma0: f64,
    pub max_trace_sigma: f64,
    pub ratio_to_first: f64,
}

/// `max_k tr(Σ_k)` across `sigma0_list` at fixed `rho`, with ratios to the
/// first entry.
pub fn quadratic_scaling_table(
    spec: &GameSpec,
    nash: &NashSolution,
    rho: f64,
    sigma0_list: &[f64],
) -> Result<Vec<ScalingRow>> {
    let Some(&first) = sigma0_list.first() else {
        return Err(Error::InvalidParams("sigma0 list is empty".into()));
    };
    if sigma0_list
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidParams(
            "sigma0 list must be strictly ascending".into(),
        ));
    }
    let m2 = spec.b2.ncols();
    let base = propagate_moments(spec, nash, &Ar1Params::new(rho, first, m2)?)?.max_trace();
    sigma0_list
        .iter()
        .map(|&sigma0| {
            let params = Ar1Params::new(rho, sigma0, m2)?;
            let max_trace_sigma = propagate_moments(spec, nash, &params)?.max_trace();
            Ok(ScalingRow {
                sigma0,
                max_trace_sigma,
                ratio_to_first: max_trace_sigma / base,
            })
        })
        .collect()
}

/// Constants of the uniform `O(σ₀²)` bound `‖Σ_k‖₂ ≤ C₂ σ₀²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    /// Overshoot constant; always 1 with `beta = max_k ‖A_cl,k‖₂`.
    pub c: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub valid: bool,
    pub reason: Option<String>,
    /// `C₂ σ₀²`; NaN when invalid.
    pub bound: f64,
    pub observed_sup_norm: f64,
    pub observed_sup_trace: f64,
    /// Whether `‖Σ_k‖₂ ≤ C₂σ₀²` held at every stage. False when invalid.
    pub holds: bool,
}

/// `C₁ = 2cβρ / (1 − βρ)`, `C₂ = (1 + C₁) ‖B₂‖₂² / (1 − β²)`.
pub fn bound_constants(c: f64, beta: f64, rho: f64, b2_norm: f64) -> (f64, f64) {
    let c1 = 2.0 * c * beta * rho / (1.0 - beta * rho);
    let c2 = (1.0 + c1) * b2_norm * b2_norm / (1.0 - beta * beta);
    (c1, c2)
}

pub fn bound_certificate(
    spec: &GameSpec,
    nash: &NashSolution,
    params: &Ar1Params,
    moments: &MomentSeries,
) -> BoundCertificate {
    let beta = nash.acl.iter().map(spectral_norm).fold(0.0, f64::max);
    let c = 1.0;
    let observed_sup_norm = moments.sup_spectral_norm();
    let observed_sup_trace = moments.max_trace();
    if beta.is_nan() || beta >= 1.0 {
        return BoundCertificate {
            c,
            beta,
            c1: f64::NAN,
            c2: f64::NAN,
            valid: false,
            reason: Some(format!("max_k ||A_cl,k||_2 = {beta} is not below 1")),
            bound: f64::NAN,
            observed_sup_norm,
            observed_sup_trace,
            holds: false,
        };
    }
    let (c1, c2) = bound_constants(c, beta, params.rho(), spectral_norm(&spec.b2));
    let bound = c2 * params.sigma0() * params.sigma0();
    // Round-off allowance on the stagewise comparison only.
    let holds = moments
        .sigma
        .iter()
        .all(|s| spectral_norm(s) <= bound * (1.0 + 1e-12));
    BoundCertificate {
        c,
        beta,
        c1,
        c2,
        valid: true,
        reason: None,
        bound,
        observed_sup_norm,
        observed_sup_trace,
        holds,
    }
}
