//! Independent oracles shared by the integration and acceptance tests. None
//! of these call into the code paths they are used to check.
#![allow(dead_code)]

use gmnash::GameSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One-player time-varying LQR for `player` against the frozen opponent
/// gains, i.e. the best response on the drifted system `A − B_j K_j[k]`.
pub fn best_response(spec: &GameSpec, opponent: &[DMatrix<f64>], player: u8) -> Vec<DMatrix<f64>> {
    let (b, b_other, q, r, qn) = match player {
        1 => (&spec.b1, &spec.b2, &spec.q1, &spec.r1, &spec.q1_terminal),
        _ => (&spec.b2, &spec.b1, &spec.q2, &spec.r2, &spec.q2_terminal),
    };
    let horizon = spec.horizon;
    let mut p = qn.clone();
    let mut gains = vec![DMatrix::zeros(b.ncols(), spec.a.nrows()); horizon];
    for k in (0..horizon).rev() {
        let drift = &spec.a - b_other * &opponent[k];
        let h = r + b.transpose() * &p * b;
        let h_inv = h.try_inverse().expect("R + BᵀPB invertible");
        let gain = h_inv * b.transpose() * &p * &drift;
        let closed = &drift - b * &gain;
        p = q + gain.transpose() * r * &gain + closed.transpose() * &p * &closed;
        p = (&p + p.transpose()) * 0.5;
        gains[k] = gain;
    }
    gains
}

/// Scalar-loop `xᵀMx`.
pub fn naive_quad(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            acc += x[i] * m[(i, j)] * x[j];
        }
    }
    acc
}

/// Scalar-loop quadratic cost of a closed-loop rollout with arbitrary gains.
pub fn naive_rollout_cost(
    spec: &GameSpec,
    k1: &[DMatrix<f64>],
    k2: &[DMatrix<f64>],
    player: u8,
) -> f64 {
    let (q, r, qn) = match player {
        1 => (&spec.q1, &spec.r1, &spec.q1_terminal),
        _ => (&spec.q2, &spec.r2, &spec.q2_terminal),
    };
    let mut x = spec.x0.clone();
    let mut total = 0.0;
    for k in 0..spec.horizon {
        let u1 = -(&k1[k] * &x);
        let u2 = -(&k2[k] * &x);
        let own = if player == 1 { &u1 } else { &u2 };
        total += naive_quad(q, &x) + naive_quad(r, own);
        x = &spec.a * &x + &spec.b1 * &u1 + &spec.b2 * &u2;
    }
    total + naive_quad(qn, &x)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

fn psd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let g = uniform_matrix(rng, n, n, 1.0);
    g.transpose() * g + DMatrix::identity(n, n) * shift
}

/// Random well-posed game with `n ≤ 3`: `A` scaled to spectral norm 0.9,
/// PSD state weights, PD input weights.
pub fn random_game(seed: u64) -> GameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (seed as usize % 3);
    let m1 = 1 + rng.random_range(0..n);
    let m2 = 1 + rng.random_range(0..n);
    let mut a = uniform_matrix(&mut rng, n, n, 1.0);
    let norm = a.clone().svd(false, false).singular_values.max();
    a *= 0.9 / norm;
    let horizon = 3 + rng.random_range(0..8usize);
    GameSpec {
        a,
        b1: uniform_matrix(&mut rng, n, m1, 1.0),
        b2: uniform_matrix(&mut rng, n, m2, 1.0),
        q1: psd(&mut rng, n, 0.0),
        q2: psd(&mut rng, n, 0.0),
        q1_terminal: psd(&mut rng, n, 0.0),
        q2_terminal: psd(&mut rng, n, 0.0),
        r1: psd(&mut rng, m1, 0.5),
        r2: psd(&mut rng, m2, 0.5),
        horizon,
        x0: DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0),
    }
}

/// Plain gradient descent on `J(L) = tr(LᵀRLΨ) + 2tr(LᵀRKΓ)` from `L = 0`.
/// The gradient is `2RLΨ + 2RKΓ`; the step is `1 / (2 λ_max(R) λ_max(Ψ))`.
pub fn gradient_descent_minimizer(
    r: &DMatrix<f64>,
    k: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> DMatrix<f64> {
    let lr = r.clone().symmetric_eigen().eigenvalues.max();
    let lp = psi.clone().symmetric_eigen().eigenvalues.max();
    let step = 1.0 / (2.0 * lr * lp);
    let rkg = r * k * gamma;
    let mut l = DMatrix::zeros(k.nrows(), psi.nrows());
    for _ in 0..200_000 {
        let grad = (r * &l * psi + &rkg) * 2.0;
        if grad.amax() < 1e-15 * (1.0 + rkg.amax()) {
            break;
        }
        l -= grad * step;
    }
    l
}

/// Direct evaluation of the stagewise objective by explicit index loops.
pub fn naive_stage_objective(
    l: &DMatrix<f64>,
    r: &DMatrix<f64>,
    k: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    psi: &DMatrix<f64>,
) -> f64 {
    let lt_r = l.transpose() * r;
    let a = &lt_r * l * psi;
    let b = &lt_r * k * gamma;
    (0..a.nrows()).map(|i| a[(i, i)] + 2.0 * b[(i, i)]).sum()
}

pub fn relative_error(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs() / truth.abs()
}
