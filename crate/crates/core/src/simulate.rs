//! Seeded, reproducible generation of continuous-semimartingale sample paths
//! and deterministic test paths.
//!
//! Stochastic kinds use exact one-step transition laws (no Euler bias):
//!
//! ```text
//! brownian             X_{i+1} = X_i + sqrt(dt) Z
//! drifted_brownian     X_{i+1} = X_i + mu dt + sigma sqrt(dt) Z
//! ornstein_uhlenbeck   X_{i+1} = X_i e^{-theta dt} + sigma sqrt((1 - e^{-2 theta dt}) / (2 theta)) Z
//! geometric_brownian   X_{i+1} = X_i exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z)
//! ```
//!
//! with Z drawn one per step from the path's own stream (see [`crate::rng`]).

use crate::error::{Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::rng::{standard_normal, SeedPolicy};

/// Process catalog: the stochastic test instances plus closed-form paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessSpec {
    Brownian,
    DriftedBrownian { mu: f64, sigma: f64 },
    OrnsteinUhlenbeck { theta: f64, sigma: f64, x0: f64 },
    GeometricBrownian { mu: f64, sigma: f64, x0: f64 },
    Deterministic(DeterministicName),
}

/// Closed-form paths used as oracle inputs for the exact identity tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeterministicName {
    Linear,
    Sine,
    Zigzag,
    Constant,
}

impl DeterministicName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(Self::Linear),
            "sine" => Ok(Self::Sine),
            "zigzag" => Ok(Self::Zigzag),
            "constant" => Ok(Self::Constant),
            other => Err(Error::invalid(format!("unknown deterministic path '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Sine => "sine",
            Self::Zigzag => "zigzag",
            Self::Constant => "constant",
        }
    }
}

/// Whether a path carries realized (squared-increment) or analytic
/// quadratic variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvMode {
    /// Cumulative squared increments; makes the discrete conservation
    /// identity exact.
    Realized,
    /// The process's known quadratic variation (brownian: t, scaled kinds:
    /// sigma^2 t, GBM: left-Riemann sigma^2 X^2 dt, deterministic: 0); tests
    /// estimator robustness against the qv discretization gap.
    Analytic,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessSpec::Brownian | ProcessSpec::Deterministic(_) => Ok(()),
            ProcessSpec::DriftedBrownian { sigma, .. } if sigma <= 0.0 => {
                Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
            }
            ProcessSpec::OrnsteinUhlenbeck { theta, sigma, .. } => {
                if sigma <= 0.0 {
                    Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
                } else if theta < 0.0 {
                    Err(Error::invalid(format!("theta must be nonnegative, got {theta}")))
                } else {
                    Ok(())
                }
            }
            ProcessSpec::GeometricBrownian { sigma, x0, .. } => {
                if sigma <= 0.0 {
                    Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
                } else if x0 <= 0.0 {
                    Err(Error::invalid(format!("x0 must be positive for GBM, got {x0}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Simulate one path; a pure function of (spec, grid, seed, qv_mode).
pub fn simulate(spec: ProcessSpec, grid: TimeGrid, seed: SeedPolicy, qv_mode: QvMode) -> Result<Path> {
    spec.validate()?;
    if let ProcessSpec::Deterministic(name) = spec {
        return deterministic(name, grid);
    }

    let n = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(n + 1);

    match spec {
        ProcessSpec::Brownian => {
            let mut x = 0.0;
            values.push(x);
            for _ in 0..n {
                x += sqrt_dt * standard_normal(&mut rng);
                values.push(x);
            }
        }
        ProcessSpec::DriftedBrownian { mu, sigma } => {
            let mut x = 0.0;
            values.push(x);
            for _ in 0..n {
                x += mu * dt + sigma * sqrt_dt * standard_normal(&mut rng);
                values.push(x);
            }
        }
        ProcessSpec::OrnsteinUhlenbeck { theta, sigma, x0 } => {
            // exact conditional law: mean decays by e^{-theta dt}, stationary-
            // bridge variance sigma^2 (1 - e^{-2 theta dt}) / (2 theta)
            let decay = (-theta * dt).exp();
            let step_sd = if theta < 1e-12 {
                sigma * sqrt_dt
            } else {
                sigma * ((1.0 - (-2.0 * theta * dt).exp()) / (2.0 * theta)).sqrt()
            };
            let mut x = x0;
            values.push(x);
            for _ in 0..n {
                x = x * decay + step_sd * standard_normal(&mut rng);
                values.push(x);
            }
        }
        ProcessSpec::GeometricBrownian { mu, sigma, x0 } => {
            let log_drift = (mu - 0.5 * sigma * sigma) * dt;
            let mut x = x0;
            values.push(x);
            for _ in 0..n {
                x *= (log_drift + sigma * sqrt_dt * standard_normal(&mut rng)).exp();
                values.push(x);
            }
        }
        ProcessSpec::Deterministic(_) => unreachable!(),
    }

    match qv_mode {
        QvMode::Realized => Path::from_values(grid, values),
        QvMode::Analytic => {
            let qv = analytic_qv(spec, grid, &values);
            Path::with_qv(grid, values, qv)
        }
    }
}

fn analytic_qv(spec: ProcessSpec, grid: TimeGrid, values: &[f64]) -> Vec<f64> {
    let n = grid.n_steps();
    let dt = grid.dt();
    match spec {
        ProcessSpec::Brownian => (0..=n).map(|i| grid.point(i)).collect(),
        ProcessSpec::DriftedBrownian { sigma, .. } | ProcessSpec::OrnsteinUhlenbeck { sigma, .. } => {
            (0..=n).map(|i| sigma * sigma * grid.point(i)).collect()
        }
        ProcessSpec::GeometricBrownian { sigma, .. } => {
            // d<X> = sigma^2 X^2 dt, accumulated left-Riemann
            let mut qv = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            qv.push(acc);
            for &x in &values[..n] {
                acc += sigma * sigma * x * x * dt;
                qv.push(acc);
            }
            qv
        }
        ProcessSpec::Deterministic(_) => vec![0.0; n + 1],
    }
}

/// The named closed-form path sampled on the grid (realized qv).
pub fn deterministic_path(name: &str, grid: TimeGrid) -> Result<Path> {
    deterministic(DeterministicName::parse(name)?, grid)
}

fn deterministic(name: DeterministicName, grid: TimeGrid) -> Result<Path> {
    let n = grid.n_steps();
    let values: Vec<f64> = match name {
        DeterministicName::Linear => (0..=n).map(|i| grid.point(i)).collect(),
        DeterministicName::Sine => (0..=n)
            .map(|i| (2.0 * std::f64::consts::PI * grid.point(i)).sin())
            .collect(),
        DeterministicName::Zigzag => (0..=n).map(|i| (i % 2) as f64).collect(),
        DeterministicName::Constant => vec![0.0; n + 1],
    };
    Path::from_values(grid, values)
}

/// Continuity proxy: the largest |increment| a brownian path should stay
/// under with overwhelming probability, 6 sqrt(dt * 2 ln n).
pub fn max_increment_bound(grid: &TimeGrid) -> f64 {
    6.0 * (grid.dt() * 2.0 * (grid.n_steps() as f64).ln()).sqrt()
}

/// Largest absolute increment of the path; callers compare against
/// [`max_increment_bound`] and warn (never fail) when it is exceeded.
pub fn max_abs_increment(path: &Path) -> f64 {
    path.values()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}
