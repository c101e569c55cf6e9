//! Run configuration, read from TOML.
//!
//! Matrices are row-major: each inner array is one row. Deviation parameters
//! live in one table per experiment (`ar1.moments`, `ar1.sweep`,
//! `ar1.trace`), and each of `rho` / `sigma0` is either a number or an array.

use gmnash::GameSpec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = r#"# gmnash run configuration. Matrices are row-major.

[game]
horizon = 9
# Initial state for the nominal trajectory written by `nash`.
# Deviation experiments always start from the origin.
x0 = [1.0, -0.5, 0.25]
a = [
    [0.7484, 0.2386, 0.0703],
    [0.2386, 0.6585, 0.2795],
    [0.0703, 0.2795, 0.4471],
]
b1 = [
    [0.3561, 0.0820, 0.0905],
    [0.0820, 0.3496, 0.2702],
    [0.0905, 0.2702, 0.3838],
]
b2 = [
    [0.2748, 0.0950, 0.0965],
    [0.0950, 0.3439, 0.2671],
    [0.0965, 0.2671, 0.3797],
]
q1 = [[50.0, 5.0, 2.0], [5.0, 10.0, 3.0], [2.0, 3.0, 1.0]]
q2 = [[50.0, 5.0, 2.0], [5.0, 10.0, 3.0], [2.0, 3.0, 1.0]]
q1_terminal = [[50.0, 5.0, 2.0], [5.0, 10.0, 3.0], [2.0, 3.0, 1.0]]
q2_terminal = [[50.0, 5.0, 2.0], [5.0, 10.0, 3.0], [2.0, 3.0, 1.0]]
r1 = [[15.0, 2.25, 0.0], [2.25, 7.5, 0.0], [0.0, 0.0, 3.0]]
r2 = [[15.0, 2.25, 0.0], [2.25, 7.5, 0.0], [0.0, 0.0, 3.0]]

# `moments`: scalar rho, ascending sigma0 grid (first entry is the baseline).
[ar1.moments]
rho = 0.5
sigma0 = [0.15, 0.30, 0.45, 0.60]

# `sweep`: paired Monte Carlo over the full grid.
[ar1.sweep]
rho = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9]
sigma0 = [0.02, 0.04, 0.06, 0.08]

# `sweep`: single point for the analytic-vs-Monte-Carlo trace and the
# deviation-state samples.
[ar1.trace]
rho = 0.5
sigma0 = 0.06

[mc]
trials = 500
trace_trials = 10000
deltax_trials = 50
base_seed = 20251016

[output]
directory = "out"
format = "csv"
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameConfig,
    pub ar1: Ar1Config,
    pub mc: McConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b1: Vec<Vec<f64>>,
    pub b2: Vec<Vec<f64>>,
    pub q1: Vec<Vec<f64>>,
    pub q2: Vec<Vec<f64>>,
    pub q1_terminal: Vec<Vec<f64>>,
    pub q2_terminal: Vec<Vec<f64>>,
    pub r1: Vec<Vec<f64>>,
    pub r2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrGrid {
    Scalar(f64),
    Grid(Vec<f64>),
}

impl ScalarOrGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ScalarOrGrid::Scalar(v) => vec![*v],
            ScalarOrGrid::Grid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Setting {
    pub rho: ScalarOrGrid,
    pub sigma0: ScalarOrGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Config {
    pub moments: Ar1Setting,
    pub sweep: Ar1Setting,
    pub trace: Ar1Setting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub trials: usize,
    pub trace_trials: usize,
    pub deltax_trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse(DEFAULT_CONFIG).expect("embedded default config parses")
    }
}

fn to_matrix(path: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let Some(first) = rows.first() else {
        return Err(CliError::ConfigParse(format!("{path}: matrix has no rows")));
    };
    let cols = first.len();
    if cols == 0 {
        return Err(CliError::ConfigParse(format!(
            "{path}: matrix has empty rows"
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::ConfigParse(format!(
                "{path}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn require_scalar(path: &str, v: &ScalarOrGrid) -> Result<f64, CliError> {
    match v {
        ScalarOrGrid::Scalar(x) => Ok(*x),
        ScalarOrGrid::Grid(_) => Err(CliError::Validation(format!(
            "{path} must be a single number"
        ))),
    }
}

fn require_grid(path: &str, v: &ScalarOrGrid) -> Result<Vec<f64>, CliError> {
    match v {
        ScalarOrGrid::Grid(g) if !g.is_empty() => Ok(g.clone()),
        ScalarOrGrid::Grid(_) => Err(CliError::Validation(format!("{path} must not be empty"))),
        ScalarOrGrid::Scalar(_) => Err(CliError::Validation(format!("{path} must be an array"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Game with the configured `x0`.
    pub fn game_spec(&self) -> Result<GameSpec, CliError> {
        let g = &self.game;
        if g.horizon == 0 {
            return Err(CliError::Validation(
                "game.horizon must be at least 1".into(),
            ));
        }
        Ok(GameSpec {
            a: to_matrix("game.a", &g.a)?,
            b1: to_matrix("game.b1", &g.b1)?,
            b2: to_matrix("game.b2", &g.b2)?,
            q1: to_matrix("game.q1", &g.q1)?,
            q2: to_matrix("game.q2", &g.q2)?,
            q1_terminal: to_matrix("game.q1_terminal", &g.q1_terminal)?,
            q2_terminal: to_matrix("game.q2_terminal", &g.q2_terminal)?,
            r1: to_matrix("game.r1", &g.r1)?,
            r2: to_matrix("game.r2", &g.r2)?,
            horizon: g.horizon,
            x0: DVector::from_vec(g.x0.clone()),
        })
    }

    /// `(rho, ascending sigma0 grid)` for `moments`.
    pub fn moments_setting(&self) -> Result<(f64, Vec<f64>), CliError> {
        let s = &self.ar1.moments;
        let rho = require_scalar("ar1.moments.rho", &s.rho)?;
        let sigma0 = s.sigma0.values();
        if sigma0.is_empty() {
            return Err(CliError::Validation(
                "ar1.moments.sigma0 must not be empty".into(),
            ));
        }
        Ok((rho, sigma0))
    }

    pub fn sweep_grids(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let s = &self.ar1.sweep;
        Ok((
            require_grid("ar1.sweep.rho", &s.rho)?,
            require_grid("ar1.sweep.sigma0", &s.sigma0)?,
        ))
    }

    pub fn trace_point(&self) -> Result<(f64, f64), CliError> {
        let s = &self.ar1.trace;
        Ok((
            require_scalar("ar1.trace.rho", &s.rho)?,
            require_scalar("ar1.trace.sigma0", &s.sigma0)?,
        ))
    }

    pub fn validate_mc(&self) -> Result<(), CliError> {
        if self.mc.trials == 0 {
            return Err(CliError::Validation("mc.trials must be at least 1".into()));
        }
        if self.mc.trace_trials == 0 {
            return Err(CliError::Validation(
                "mc.trace_trials must be at least 1".into(),
            ));
        }
        if self.output.format != "csv" {
            return Err(CliError::Validation(format!(
                "output.format: unsupported format {:?} (only \"csv\")",
                self.output.format
            )));
        }
        Ok(())
    }
}
