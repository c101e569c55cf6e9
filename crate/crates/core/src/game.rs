//! Game statement, coupled Riccati solve, rollouts and cost evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    min_symmetric_eigenvalue, quad_form, rank, reciprocal_condition, spectral_norm,
    spectral_radius, symmetrize,
};

/// Relative PSD tolerance: `λ_min ≥ −TOL_PSD_REL · ‖M‖₂`.
pub const TOL_PSD_REL: f64 = 1e-9;
/// Absolute PD floor: `λ_min > TOL_PD`.
pub const TOL_PD: f64 = 1e-12;
/// Stage systems with reciprocal condition below this are rejected.
pub const STAGE_RCOND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    One,
    Two,
}

/// Dynamics `x⁺ = A x + B₁ u₁ + B₂ u₂` over stages `0..horizon`, with stage
/// weights `(Q_i, R_i)` and terminal weights `Q_{i,N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
    pub q1_terminal: DMatrix<f64>,
    pub q2_terminal: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub horizon: usize,
    pub x0: DVector<f64>,
}

impl GameSpec {
    /// Three-state benchmark game (n = m₁ = m₂ = 3, horizon 9) used as the
    /// default configuration. Initial state is zero.
    pub fn benchmark() -> Self {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.7484, 0.2386, 0.0703, //
                0.2386, 0.6585, 0.2795, //
                0.0703, 0.2795, 0.4471,
            ],
        );
        let b1 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.3561, 0.0820, 0.0905, //
                0.0820, 0.3496, 0.2702, //
                0.0905, 0.2702, 0.3838,
            ],
        );
        let b2 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.2748, 0.0950, 0.0965, //
                0.0950, 0.3439, 0.2671, //
                0.0965, 0.2671, 0.3797,
            ],
        );
        let q = DMatrix::from_row_slice(3, 3, &[50.0, 5.0, 2.0, 5.0, 10.0, 3.0, 2.0, 3.0, 1.0]);
        let r = DMatrix::from_row_slice(3, 3, &[15.0, 2.25, 0.0, 2.25, 7.5, 0.0, 0.0, 0.0, 3.0]);
        GameSpec {
            a,
            b1,
            b2,
            q1: q.clone(),
            q2: q.clone(),
            q1_terminal: q.clone(),
            q2_terminal: q,
            r1: r.clone(),
            r2: r,
            horizon: 9,
            x0: DVector::zeros(3),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dims(&self) -> (usize, usize) {
        (self.b1.ncols(), self.b2.ncols())
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Self {
        self.x0 = x0;
        self
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.a.nrows();
        let (m1, m2) = self.input_dims();
        let square = |name: &str, m: &DMatrix<f64>, d: usize| -> Result<()> {
            if m.shape() != (d, d) {
                return Err(Error::dims(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        square("A", &self.a, n)?;
        if self.b1.nrows() != n || self.b2.nrows() != n {
            return Err(Error::dims(format!(
                "B1/B2 must have {n} rows (got {} and {})",
                self.b1.nrows(),
                self.b2.nrows()
            )));
        }
        square("Q1", &self.q1, n)?;
        square("Q2", &self.q2, n)?;
        square("Q1N", &self.q1_terminal, n)?;
        square("Q2N", &self.q2_terminal, n)?;
        square("R1", &self.r1, m1)?;
        square("R2", &self.r2, m2)?;
        if self.x0.len() != n {
            return Err(Error::dims(format!(
                "x0 has length {}, expected {n}",
                self.x0.len()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks dimensions, symmetry-PSD of the state weights and symmetry-PD
    /// of the input weights.
    pub fn validate(&self) -> Result<()> {
        self.check_dims()?;
        let psd = [
            ("Q1", &self.q1),
            ("Q2", &self.q2),
            ("Q1N", &self.q1_terminal),
            ("Q2N", &self.q2_terminal),
        ];
        for (name, m) in psd {
            check_symmetric(name, m)?;
            let lmin = min_symmetric_eigenvalue(m);
            if lmin < -TOL_PSD_REL * spectral_norm(m) {
                return Err(Error::IndefiniteWeight {
                    name,
                    expected: "positive semidefinite",
                    min_eigenvalue: lmin,
                });
            }
        }
        for (name, m) in [("R1", &self.r1), ("R2", &self.r2)] {
            check_symmetric(name, m)?;
            let lmin = min_symmetric_eigenvalue(m);
            if lmin.is_nan() || lmin <= TOL_PD {
                return Err(Error::IndefiniteWeight {
                    name,
                    expected: "positive definite",
                    min_eigenvalue: lmin,
                });
            }
        }
        Ok(())
    }

    pub fn stage_weights(&self, player: Player) -> (&DMatrix<f64>, &DMatrix<f64>, &DMatrix<f64>) {
        match player {
            Player::One => (&self.q1, &self.r1, &self.q1_terminal),
            Player::Two => (&self.q2, &self.r2, &self.q2_terminal),
        }
    }
}

fn check_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(Error::IndefiniteWeight {
            name,
            expected: "symmetric",
            min_eigenvalue: f64::NAN,
        });
    }
    Ok(())
}

/// Feedback Nash gains `u_i = −K_i[k] x` with value matrices and the
/// resulting closed-loop matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct NashSolution {
    pub k1: Vec<DMatrix<f64>>,
    pub k2: Vec<DMatrix<f64>>,
    /// `p1[k]` for `k = 0..=N`; `p1[N]` is the terminal weight.
    pub p1: Vec<DMatrix<f64>>,
    pub p2: Vec<DMatrix<f64>>,
    pub acl: Vec<DMatrix<f64>>,
    pub max_spectral_radius: f64,
    pub max_spectral_norm: f64,
    /// Smallest reciprocal condition number over the per-stage gain systems.
    pub min_stage_solve_conditioning: f64,
}

impl NashSolution {
    pub fn horizon(&self) -> usize {
        self.k1.len()
    }

    fn check_against(&self, spec: &GameSpec) -> Result<()> {
        let n = spec.state_dim();
        let (m1, m2) = spec.input_dims();
        if self.horizon() != spec.horizon {
            return Err(Error::dims(format!(
                "solution covers {} stages, game has {}",
                self.horizon(),
                spec.horizon
            )));
        }
        let ok = self.k1.iter().all(|k| k.shape() == (m1, n))
            && self.k2.iter().all(|k| k.shape() == (m2, n))
            && self.acl.iter().all(|a| a.shape() == (n, n));
        if !ok {
            return Err(Error::dims("gain shapes do not match the game"));
        }
        Ok(())
    }
}

/// Backward coupled Riccati recursion. At each stage the gains solve
///
/// ```text
/// [R1 + B1ᵀP1'B1   B1ᵀP1'B2    ] [K1]   [B1ᵀP1'A]
/// [B2ᵀP2'B1        R2 + B2ᵀP2'B2] [K2] = [B2ᵀP2'A]
/// ```
///
/// and the value matrices update as `P_i = Q_i + K_iᵀR_iK_i + A_clᵀ P_i' A_cl`.
pub fn solve_feedback_nash(spec: &GameSpec) -> Result<NashSolution> {
    spec.validate()?;
    let n = spec.state_dim();
    let (m1, m2) = spec.input_dims();
    let horizon = spec.horizon;
    let (a, b1, b2) = (&spec.a, &spec.b1, &spec.b2);

    let mut k1 = vec![DMatrix::zeros(m1, n); horizon];
    let mut k2 = vec![DMatrix::zeros(m2, n); horizon];
    let mut acl = vec![DMatrix::zeros(n, n); horizon];
    let mut p1 = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut p2 = vec![DMatrix::zeros(n, n); horizon + 1];
    p1[horizon] = spec.q1_terminal.clone();
    p2[horizon] = spec.q2_terminal.clone();

    let mut min_rcond = f64::INFINITY;
    for k in (0..horizon).rev() {
        let p1n = &p1[k + 1];
        let p2n = &p2[k + 1];
        let b1t_p1 = b1.transpose() * p1n;
        let b2t_p2 = b2.transpose() * p2n;

        let mut lhs = DMatrix::zeros(m1 + m2, m1 + m2);
        lhs.view_mut((0, 0), (m1, m1))
            .copy_from(&(&spec.r1 + &b1t_p1 * b1));
        lhs.view_mut((0, m1), (m1, m2)).copy_from(&(&b1t_p1 * b2));
        lhs.view_mut((m1, 0), (m2, m1)).copy_from(&(&b2t_p2 * b1));
        lhs.view_mut((m1, m1), (m2, m2))
            .copy_from(&(&spec.r2 + &b2t_p2 * b2));
        let mut rhs = DMatrix::zeros(m1 + m2, n);
        rhs.view_mut((0, 0), (m1, n)).copy_from(&(&b1t_p1 * a));
        rhs.view_mut((m1, 0), (m2, n)).copy_from(&(&b2t_p2 * a));

        let rcond = reciprocal_condition(&lhs);
        min_rcond = min_rcond.min(rcond);
        if rcond.is_nan() || rcond < STAGE_RCOND_FLOOR {
            return Err(Error::SingularStageSystem { stage: k, rcond });
        }
        let gains = lhs
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularStageSystem { stage: k, rcond })?;
        let g1 = gains.rows(0, m1).into_owned();
        let g2 = gains.rows(m1, m2).into_owned();
        let a_cl = a - b1 * &g1 - b2 * &g2;

        let mut p1k = &spec.q1 + g1.transpose() * &spec.r1 * &g1 + a_cl.transpose() * p1n * &a_cl;
        let mut p2k = &spec.q2 + g2.transpose() * &spec.r2 * &g2 + a_cl.transpose() * p2n * &a_cl;
        symmetrize(&mut p1k);
        symmetrize(&mut p2k);

        p1[k] = p1k;
        p2[k] = p2k;
        k1[k] = g1;
        k2[k] = g2;
        acl[k] = a_cl;
    }

    let max_spectral_radius = acl.iter().map(spectral_radius).fold(0.0, f64::max);
    let max_spectral_norm = acl.iter().map(spectral_norm).fold(0.0, f64::max);

    Ok(NashSolution {
        k1,
        k2,
        p1,
        p2,
        acl,
        max_spectral_radius,
        max_spectral_norm,
        min_stage_solve_conditioning: min_rcond,
    })
}

/// States and inputs over one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub u1: Vec<DVector<f64>>,
    pub u2: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.u1.len()
    }
}

/// Closed-loop rollout from `spec.x0` under the Nash gains.
pub fn nominal_rollout(spec: &GameSpec, nash: &NashSolution) -> Result<Trajectory> {
    nash.check_against(spec)?;
    if spec.x0.len() != spec.state_dim() {
        return Err(Error::dims("x0 length does not match A"));
    }
    let horizon = spec.horizon;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut u1 = Vec::with_capacity(horizon);
    let mut u2 = Vec::with_capacity(horizon);
    let mut x = spec.x0.clone();
    for k in 0..horizon {
        u1.push(-(&nash.k1[k] * &x));
        u2.push(-(&nash.k2[k] * &x));
        let next = &nash.acl[k] * &x;
        states.push(std::mem::replace(&mut x, next));
    }
    states.push(x);
    Ok(Trajectory { states, u1, u2 })
}

/// `Σ_k (x_kᵀQ_i x_k + u_{i,k}ᵀR_i u_{i,k}) + x_NᵀQ_{i,N}x_N`.
pub fn evaluate_cost(traj: &Trajectory, spec: &GameSpec, player: Player) -> Result<f64> {
    let horizon = traj.horizon();
    let n = spec.state_dim();
    let (q, r, qn) = spec.stage_weights(player);
    let inputs = match player {
        Player::One => &traj.u1,
        Player::Two => &traj.u2,
    };
    if traj.states.len() != horizon + 1 || traj.u2.len() != horizon {
        return Err(Error::dims("trajectory lengths are inconsistent"));
    }
    if traj.states.iter().any(|x| x.len() != n) || inputs.iter().any(|u| u.len() != r.nrows()) {
        return Err(Error::dims("trajectory vectors do not match the game"));
    }
    let running: f64 = (0..horizon)
        .map(|k| quad_form(q, &traj.states[k]) + quad_form(r, &inputs[k]))
        .sum();
    Ok(running + quad_form(qn, &traj.states[horizon]))
}

/// Report-only diagnostics; nothing here fails.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// Reciprocal condition of the block matrix
    /// `[[I, B₁R₁⁻¹B₁ᵀ, B₂R₂⁻¹B₂ᵀ], [P₁,k, −I, 0], [P₂,k, 0, −I]]` for `k = 0..=N`.
    pub stage_invertibility_margins: Vec<f64>,
    pub min_invertibility_margin: f64,
    pub controllability_rank: usize,
    pub state_dim: usize,
    pub controllable: bool,
    /// `max_k ‖A_cl,k‖₂`.
    pub beta: f64,
    pub beta_below_one: bool,
    pub max_spectral_radius: f64,
    pub schur_stable: bool,
}

pub fn check_assumptions(spec: &GameSpec, nash: &NashSolution) -> DiagnosticsReport {
    let n = spec.state_dim();
    let (m1, m2) = spec.input_dims();

    let coupling = |b: &DMatrix<f64>, r: &DMatrix<f64>| match r.clone().try_inverse() {
        Some(r_inv) => b * r_inv * b.transpose(),
        None => DMatrix::from_element(n, n, f64::NAN),
    };
    let s1 = coupling(&spec.b1, &spec.r1);
    let s2 = coupling(&spec.b2, &spec.r2);
    let eye = DMatrix::<f64>::identity(n, n);
    let margins: Vec<f64> = nash
        .p1
        .iter()
        .zip(&nash.p2)
        .map(|(p1, p2)| {
            let mut m = DMatrix::zeros(3 * n, 3 * n);
            m.view_mut((0, 0), (n, n)).copy_from(&eye);
            m.view_mut((0, n), (n, n)).copy_from(&s1);
            m.view_mut((0, 2 * n), (n, n)).copy_from(&s2);
            m.view_mut((n, 0), (n, n)).copy_from(p1);
            m.view_mut((n, n), (n, n)).copy_from(&(-&eye));
            m.view_mut((2 * n, 0), (n, n)).copy_from(p2);
            m.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(-&eye));
            if m.iter().any(|v| !v.is_finite()) {
                0.0
            } else {
                reciprocal_condition(&m)
            }
        })
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);

    // Kalman matrix [B, AB, …, A^{n-1}B] with B = [B1 B2].
    let mut b = DMatrix::zeros(n, m1 + m2);
    b.view_mut((0, 0), (n, m1)).copy_from(&spec.b1);
    b.view_mut((0, m1), (n, m2)).copy_from(&spec.b2);
    let width = m1 + m2;
    let mut kalman = DMatrix::zeros(n, n * width);
    let mut block = b;
    for i in 0..n {
        kalman
            .view_mut((0, i * width), (n, width))
            .copy_from(&block);
        block = &spec.a * block;
    }
    let ctrb_rank = rank(&kalman, 1e-10);

    let beta = nash.acl.iter().map(spectral_norm).fold(0.0, f64::max);
    let rho_max = nash.acl.iter().map(spectral_radius).fold(0.0, f64::max);

    DiagnosticsReport {
        stage_invertibility_margins: margins,
        min_invertibility_margin: min_margin,
        controllability_rank: ctrb_rank,
        state_dim: n,
        controllable: ctrb_rank == n,
        beta,
        beta_below_one: beta < 1.0,
        max_spectral_radius: rho_max,
        schur_stable: rho_max < 1.0,
    }
}
