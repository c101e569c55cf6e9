//! AR(1) Gauss–Markov execution deviations.
//!
//! `Δu_k = ρ Δu_{k−1} + σ_w w_k` with `Δu_0 = 0`, `w_k ~ N(0, I)` and the
//! variance-preserving scale `σ_w = √(1 − ρ²) σ₀`.
//!
//! Random streams are ChaCha8 keyed by [`trial_seed`]; normals come from
//! Box–Muller so every step consumes a fixed number of uniforms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    rho: f64,
    sigma0: f64,
    channels: usize,
}

impl Ar1Params {
    pub fn new(rho: f64, sigma0: f64, channels: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParams(format!(
                "rho = {rho} is outside [0, 1)"
            )));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma0 = {sigma0} must be positive"
            )));
        }
        if channels == 0 {
            return Err(Error::InvalidParams(
                "channel count must be positive".into(),
            ));
        }
        Ok(Ar1Params {
            rho,
            sigma0,
            channels,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn sigma_w(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt() * self.sigma0
    }

    /// Same persistence and channels, different scale.
    pub fn with_sigma0(&self, sigma0: f64) -> Result<Self> {
        Self::new(self.rho, sigma0, self.channels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationPath {
    /// `Δu_k` for `k = 0..N`; the first entry is always zero.
    pub values: Vec<DVector<f64>>,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` of a run keyed by `base_seed`. Depends only on the
/// pair, never on scheduling.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ splitmix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Fill `out` with standard normals. Each pair of outputs consumes exactly
/// two uniforms; an odd tail discards the second normal of its pair.
pub(crate) fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(2) {
        // (0, 1] keeps the log finite.
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        chunk[0] = radius * angle.cos();
        if let Some(second) = chunk.get_mut(1) {
            *second = radius * angle.sin();
        }
    }
}

pub fn sample_path(params: &Ar1Params, horizon: usize, seed: u64) -> Result<DeviationPath> {
    if horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.channels;
    let (rho, sigma_w) = (params.rho, params.sigma_w());
    let mut values = Vec::with_capacity(horizon);
    values.push(DVector::zeros(m));
    let mut noise = vec![0.0; m];
    for k in 1..horizon {
        fill_standard_normal(&mut rng, &mut noise);
        let prev = &values[k - 1];
        let next = DVector::from_fn(m, |i, _| rho * prev[i] + sigma_w * noise[i]);
        values.push(next);
    }
    Ok(DeviationPath { values, seed })
}

fn rho_pow(rho: f64, exp: usize) -> f64 {
    // 0^0 = 1 is what the closed forms need.
    rho.powi(exp as i32)
}

/// `Φ_k = E[Δu_k Δu_kᵀ] = σ₀² (1 − ρ^{2k}) I`.
pub fn phi_marginal(params: &Ar1Params, k: usize) -> DMatrix<f64> {
    let s2 = params.sigma0 * params.sigma0;
    let scale = s2 * (1.0 - rho_pow(params.rho, 2 * k));
    DMatrix::identity(params.channels, params.channels) * scale
}

/// `Φ_{k,l} = E[Δu_k Δu_lᵀ]`: `ρ^{k−l} Φ_l` for `k ≥ l`, transpose otherwise.
pub fn phi_cross(params: &Ar1Params, k: usize, l: usize) -> DMatrix<f64> {
    if k >= l {
        phi_marginal(params, l) * rho_pow(params.rho, k - l)
    } else {
        phi_cross(params, l, k).transpose()
    }
}
