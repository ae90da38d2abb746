//! The specialised movement model: Brownian-motion bearing, OU speed.

mod kernels;
mod likelihood;
pub(crate) use likelihood::error_log_likelihood_at;
mod simulate;

pub use kernels::{
    bearing_transition, initial_step_dist, speed_transition, step_transition, InitialBearing,
};
pub use likelihood::{bearing_log_likelihood, error_log_likelihood, path_log_likelihood};
pub use simulate::simulate_path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Snapping tolerance for observation times, as a fraction of `dt`.
pub const GRID_SNAP_TOL: f64 = 1e-6;

/// Movement and error parameters.
///
/// Units: bearing volatility in rad²/min, mean speed in m/min, reversion
/// rate in 1/min, speed volatility in m²/min³, error variance in m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub sigma_b2: f64,
    pub mu: f64,
    pub lambda: f64,
    pub sigma_s2: f64,
    pub sigma_e2: f64,
}

impl ModelParams {
    pub const NAMES: [&'static str; 5] = ["sigmaB2", "mu", "lambda", "sigmaS2", "sigmaE2"];

    pub fn new(sigma_b2: f64, mu: f64, lambda: f64, sigma_s2: f64, sigma_e2: f64) -> Result<Self> {
        let params = Self {
            sigma_b2,
            mu,
            lambda,
            sigma_s2,
            sigma_e2,
        };
        params.validate()?;
        Ok(params)
    }

    /// Every value finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in Self::NAMES.iter().zip(self.to_array()) {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// Looser check used for forward simulation, where zero volatilities
    /// and a zero error variance are meaningful degenerate cases.
    pub fn validate_for_simulation(&self) -> Result<()> {
        for (name, value) in Self::NAMES.iter().zip(self.to_array()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParam { name, value });
            }
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParam {
                name: "lambda",
                value: self.lambda,
            });
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.sigma_b2,
            self.mu,
            self.lambda,
            self.sigma_s2,
            self.sigma_e2,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            sigma_b2: a[0],
            mu: a[1],
            lambda: a[2],
            sigma_s2: a[3],
            sigma_e2: a[4],
        }
    }
}

/// Convention for the variance of the first step.
///
/// `Doubled` gives the first step variance `dt² σ_S² / λ`, twice the stationary
/// variance of the step chain. `Stationary` uses `dt² σ_S² / (2λ)` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialStepVariance {
    #[default]
    Doubled,
    Stationary,
}

/// A scalar Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal1 {
    pub mean: f64,
    pub var: f64,
}

impl Normal1 {
    pub fn new(mean: f64, var: f64) -> Self {
        Self { mean, var }
    }

    /// Log-density. A zero-variance law is a point mass: 0 at the mean,
    /// `-inf` elsewhere.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if self.var == 0.0 {
            return if x == self.mean {
                0.0
            } else {
                f64::NEG_INFINITY
            };
        }
        let r = x - self.mean;
        -0.5 * ((2.0 * std::f64::consts::PI * self.var).ln() + r * r / self.var)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.var.sqrt() * z
    }
}

/// Fine-grid path: bearings θ_1..θ_n (unwrapped, rad) and steps ν_1..ν_n (m)
/// on a grid of spacing `dt` starting from an origin location.
///
/// Node 0 is the origin; step `j` (1-based) moves node `j-1` to node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedPath {
    origin: [f64; 2],
    dt: f64,
    bearings: Vec<f64>,
    steps: Vec<f64>,
}

impl RefinedPath {
    pub fn new(origin: [f64; 2], dt: f64, bearings: Vec<f64>, steps: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidPath(format!("dt must be > 0, got {dt}")));
        }
        if bearings.is_empty() || bearings.len() != steps.len() {
            return Err(Error::InvalidPath(format!(
                "need equal, non-zero numbers of bearings and steps (got {} and {})",
                bearings.len(),
                steps.len()
            )));
        }
        if !origin
            .iter()
            .chain(&bearings)
            .chain(&steps)
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidPath("non-finite value".into()));
        }
        Ok(Self {
            origin,
            dt,
            bearings,
            steps,
        })
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of steps `n`; the path has `n + 1` nodes.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// θ_1..θ_n; element `j - 1` is θ_j.
    pub fn bearings(&self) -> &[f64] {
        &self.bearings
    }

    /// ν_1..ν_n; element `j - 1` is ν_j.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// θ_j for 1-based `j`.
    pub fn bearing(&self, j: usize) -> f64 {
        self.bearings[j - 1]
    }

    /// ν_j for 1-based `j`.
    pub fn step(&self, j: usize) -> f64 {
        self.steps[j - 1]
    }

    /// Overwrite θ_j, ν_j for `j = first, first + 1, ...`.
    pub fn splice(&mut self, first: usize, bearings: &[f64], steps: &[f64]) -> Result<()> {
        if first == 0 || bearings.len() != steps.len() || first - 1 + steps.len() > self.len() {
            return Err(Error::InvalidPath(format!(
                "splice of {} values at step {first} does not fit a path of {} steps",
                steps.len(),
                self.len()
            )));
        }
        let range = first - 1..first - 1 + steps.len();
        self.bearings[range.clone()].copy_from_slice(bearings);
        self.steps[range].copy_from_slice(steps);
        Ok(())
    }

    /// Replace all steps, keeping bearings and origin.
    pub fn set_steps(&mut self, steps: Vec<f64>) -> Result<()> {
        if steps.len() != self.len() || !steps.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPath(format!(
                "need {} finite steps, got {} values",
                self.len(),
                steps.len()
            )));
        }
        self.steps = steps;
        Ok(())
    }

    pub fn set_origin(&mut self, origin: [f64; 2]) -> Result<()> {
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite origin {origin:?}")));
        }
        self.origin = origin;
        Ok(())
    }
}

/// Observed locations on the refined grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    times: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    grid_index: Vec<usize>,
    dt: f64,
}

impl ObservationSet {
    /// Snap observation times onto a grid of spacing `dt` anchored at the
    /// first observation time. A time is accepted at node `k` when
    /// `|t - t_1 - k dt| <= 1e-6 dt`; otherwise every offending row is
    /// reported.
    pub fn on_grid(times: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if times.len() != xs.len() || times.len() != ys.len() {
            return Err(Error::InvalidObservations(format!(
                "column lengths differ: {} times, {} x, {} y",
                times.len(),
                xs.len(),
                ys.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidObservations(format!(
                "need at least 2 observations, got {}",
                times.len()
            )));
        }
        if let Some(i) = (0..times.len())
            .find(|&i| !(times[i].is_finite() && xs[i].is_finite() && ys[i].is_finite()))
        {
            return Err(Error::InvalidObservations(format!(
                "non-finite value at row {i}"
            )));
        }
        if let Some(i) = (1..times.len()).find(|&i| times[i] <= times[i - 1]) {
            return Err(Error::InvalidObservations(format!(
                "times not strictly increasing at row {i}"
            )));
        }
        let t0 = times[0];
        let mut grid_index = Vec::with_capacity(times.len());
        let mut off_grid = Vec::new();
        for (row, &t) in times.iter().enumerate() {
            let k = ((t - t0) / dt).round();
            if (t - t0 - k * dt).abs() > GRID_SNAP_TOL * dt {
                off_grid.push(row);
            }
            grid_index.push(k as usize);
        }
        if !off_grid.is_empty() {
            return Err(Error::GridSnap { dt, rows: off_grid });
        }
        // Distinct times closer than dt would collapse onto one node.
        if let Some(i) = (1..grid_index.len()).find(|&i| grid_index[i] <= grid_index[i - 1]) {
            return Err(Error::InvalidObservations(format!(
                "rows {} and {i} snap to the same grid node",
                i - 1
            )));
        }
        Ok(Self {
            times,
            xs,
            ys,
            grid_index,
            dt,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn grid_index(&self) -> &[usize] {
        &self.grid_index
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin_time(&self) -> f64 {
        self.times[0]
    }

    /// Number of refined steps needed to reach the last observation.
    pub fn n_steps(&self) -> usize {
        *self.grid_index.last().expect("at least two observations")
    }

    pub fn location(&self, i: usize) -> [f64; 2] {
        [self.xs[i], self.ys[i]]
    }
}
