//! Player 1's predictive feedforward against Player 2's AR(1) deviation.
//!
//! Player 1 plays `u₁ = −K₁[k] x − L[k] ρ Δu_{k−1}`, where `ρ Δu_{k−1}` is
//! the one-step prediction of Player 2's current deviation. The gains
//! minimise the stagewise objective
//!
//! ```text
//! J_k(L) = tr(Lᵀ R₁ L Ψ_k) + 2 tr(Lᵀ R₁ K₁[k] Γ_k),   Ψ_k = ρ² Φ_{k−1},  Γ_k = C_k
//! ```
//!
//! with the moments frozen at their uncompensated values, which gives
//! `L*[k] = −ρ⁻² K₁[k] C_k Φ_{k−1}⁺`.

use nalgebra::{DMatrix, DVector};

use crate::deviation::Ar1Params;
use crate::error::{Error, Result};
use crate::game::{GameSpec, NashSolution};
use crate::linalg::{pinv, PINV_REL_CUTOFF};
use crate::moments::MomentSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorGains {
    /// `L[k]`, `m₁ × m₂`, for `k = 0..N`. `L[0]` is always zero.
    pub gains: Vec<DMatrix<f64>>,
    pub frozen_cross: Vec<DMatrix<f64>>,
    pub frozen_phi: Vec<DMatrix<f64>>,
    pub rho: f64,
}

impl CompensatorGains {
    /// All-zero gains, i.e. the nominal Nash policy.
    pub fn zero(horizon: usize, m1: usize, m2: usize, rho: f64) -> Self {
        CompensatorGains {
            gains: vec![DMatrix::zeros(m1, m2); horizon],
            frozen_cross: Vec::new(),
            frozen_phi: Vec::new(),
            rho,
        }
    }

    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    pub fn is_zero(&self) -> bool {
        self.gains.iter().all(|l| l.iter().all(|&v| v == 0.0))
    }
}

fn check_moments(nash: &NashSolution, moments: &MomentSeries) -> Result<(usize, usize, usize)> {
    let horizon = nash.horizon();
    if moments.cross.len() < horizon || moments.phi.len() < horizon {
        return Err(Error::dims(format!(
            "moments cover {} stages, gains need {horizon}",
            moments.cross.len().min(moments.phi.len())
        )));
    }
    let m1 = nash.k1.first().map_or(0, |k| k.nrows());
    let n = nash.k1.first().map_or(0, |k| k.ncols());
    let m2 = moments.phi.first().map_or(0, |p| p.nrows());
    if moments.cross.iter().any(|c| c.shape() != (n, m2)) {
        return Err(Error::dims("cross-covariance shape does not match gains"));
    }
    Ok((horizon, m1, m2))
}

pub fn optimal_gains(
    nash: &NashSolution,
    moments: &MomentSeries,
    params: &Ar1Params,
) -> Result<CompensatorGains> {
    let (horizon, m1, m2) = check_moments(nash, moments)?;
    if params.channels() != m2 {
        return Err(Error::dims("deviation channels do not match moments"));
    }
    let rho = params.rho();
    let frozen_cross = moments.cross[..horizon].to_vec();
    let frozen_phi = moments.phi[..horizon].to_vec();
    if rho == 0.0 {
        return Ok(CompensatorGains {
            frozen_cross,
            frozen_phi,
            ..CompensatorGains::zero(horizon, m1, m2, rho)
        });
    }
    let mut gains = Vec::with_capacity(horizon);
    gains.push(DMatrix::zeros(m1, m2));
    for k in 1..horizon {
        let phi_inv = pinv(&moments.phi[k - 1], PINV_REL_CUTOFF);
        gains.push(-(&nash.k1[k] * &moments.cross[k] * phi_inv) / (rho * rho));
    }
    Ok(CompensatorGains {
        gains,
        frozen_cross,
        frozen_phi,
        rho,
    })
}

/// `J_k(L)`; identically zero at `k = 0` where the predictor is zero.
pub fn stage_objective(
    spec: &GameSpec,
    nash: &NashSolution,
    moments: &MomentSeries,
    params: &Ar1Params,
    gain: &DMatrix<f64>,
    k: usize,
) -> Result<f64> {
    let (horizon, m1, m2) = check_moments(nash, moments)?;
    if k >= horizon {
        return Err(Error::dims(format!("stage {k} is outside 0..{horizon}")));
    }
    if gain.shape() != (m1, m2) || spec.r1.shape() != (m1, m1) {
        return Err(Error::dims(format!(
            "gain is {}x{}, expected {m1}x{m2}",
            gain.nrows(),
            gain.ncols()
        )));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let rho = params.rho();
    let psi = &moments.phi[k - 1] * (rho * rho);
    let gamma = &moments.cross[k];
    let r1_l = &spec.r1 * gain;
    let quadratic = (gain.transpose() * &r1_l * psi).trace();
    let linear = (r1_l.transpose() * &nash.k1[k] * gamma).trace();
    Ok(quadratic + 2.0 * linear)
}

/// `−Σ_k J_k(L[k])`: the reduction in Player 1's expected cost predicted
/// under frozen moments.
pub fn predicted_reduction(
    spec: &GameSpec,
    nash: &NashSolution,
    moments: &MomentSeries,
    params: &Ar1Params,
    gains: &CompensatorGains,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, gain) in gains.gains.iter().enumerate() {
        total -= stage_objective(spec, nash, moments, params, gain, k)?;
    }
    Ok(total)
}

/// Player 1's input `−K₁[k] x − L[k] ρ Δu_{k−1}`.
pub fn apply_policy(
    nash: &NashSolution,
    gains: &CompensatorGains,
    state: &DVector<f64>,
    prev_deviation: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    let (Some(k1), Some(gain)) = (nash.k1.get(k), gains.gains.get(k)) else {
        return Err(Error::dims(format!("stage {k} is outside the horizon")));
    };
    if state.len() != k1.ncols() || prev_deviation.len() != gain.ncols() {
        return Err(Error::dims(
            "state or deviation length does not match gains",
        ));
    }
    Ok(-(k1 * state) - gain * prev_deviation * gains.rho)
}
