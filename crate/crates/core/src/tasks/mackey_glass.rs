//! Mackey-Glass series `du/dt = a u(t-τ) / (1 + u(t-τ)^c) - b u(t)`.
//!
//! Defaults are a = 2, b = 1, τ = 17, c = 10. Note this is ten times the
//! common a = 0.2, b = 0.1 choice with τ unchanged, so the dynamics differ
//! from the usual benchmark series and not just by a time rescaling.
//!
//! Integration is classical RK4 with a constant history. The delayed value
//! at the half step is interpolated between stored grid points; inside the
//! constant history a straight line is exact, afterwards a cubic Hermite
//! interpolant built from the stored derivatives keeps the scheme
//! fourth-order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Split, TaskDataset, TaskMeta};
use crate::error::{RcError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MackeyGlassParams {
    #[serde(default = "d_a")]
    pub a: f64,
    #[serde(default = "d_b")]
    pub b: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_c")]
    pub c: f64,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_washout")]
    pub washout_time: f64,
    #[serde(default)]
    pub seed: u64,
    /// Constant history value; drawn uniformly from (0, 1) when absent.
    #[serde(default)]
    pub initial: Option<f64>,
    #[serde(default = "d_train")]
    pub train: usize,
    #[serde(default = "d_validation")]
    pub validation: usize,
}

fn d_a() -> f64 {
    2.0
}
fn d_b() -> f64 {
    1.0
}
fn d_tau() -> f64 {
    17.0
}
fn d_c() -> f64 {
    10.0
}
fn d_dt() -> f64 {
    0.1
}
fn d_samples() -> usize {
    4500
}
fn d_washout() -> f64 {
    1000.0
}
fn d_train() -> usize {
    2000
}
fn d_validation() -> usize {
    500
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        MackeyGlassParams {
            a: d_a(),
            b: d_b(),
            tau: d_tau(),
            c: d_c(),
            dt: d_dt(),
            n_samples: d_samples(),
            washout_time: d_washout(),
            seed: 0,
            initial: None,
            train: d_train(),
            validation: d_validation(),
        }
    }
}

fn whole_steps(value: f64, dt: f64) -> Option<usize> {
    let steps = (value / dt).round();
    (steps >= 0.0 && (steps * dt - value).abs() <= 1e-9 * value.abs().max(1.0)).then_some(steps as usize)
}

impl MackeyGlassParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("tau", self.tau)] {
            if !v.is_finite() {
                return Err(RcError::invalid(format!("task.{name}"), "must be finite"));
            }
        }
        if !(self.dt > 0.0) {
            return Err(RcError::invalid("task.dt", "must be > 0"));
        }
        if !(self.tau > 0.0) || whole_steps(self.tau, self.dt).is_none() {
            return Err(RcError::invalid("task.tau", format!("tau/dt must be a positive integer (tau={}, dt={})", self.tau, self.dt)));
        }
        if whole_steps(1.0, self.dt).is_none() {
            return Err(RcError::invalid("task.dt", "1/dt must be an integer for unit-period sampling"));
        }
        if !(self.washout_time >= 0.0) || whole_steps(self.washout_time, self.dt).is_none() {
            return Err(RcError::invalid("task.washout_time", "must be a nonnegative multiple of dt"));
        }
        if let Some(x0) = self.initial {
            if !x0.is_finite() {
                return Err(RcError::invalid("task.initial", "must be finite"));
            }
        }
        if self.n_samples == 0 {
            return Err(RcError::invalid("task.n_samples", "must be >= 1"));
        }
        Ok(())
    }

    fn initial_value(&self) -> f64 {
        self.initial.unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            loop {
                let x: f64 = rng.random();
                if x > 0.0 {
                    break x;
                }
            }
        })
    }

    #[inline]
    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        self.a * delayed / (1.0 + delayed.powf(self.c)) - self.b * x
    }
}

/// Solution on the grid `t = 0, dt, …, steps·dt` from the constant history
/// `x0` on `[-τ, 0]`.
pub fn mackey_glass_integrate(params: &MackeyGlassParams, x0: f64, steps: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let dt = params.dt;
    let lag = whole_steps(params.tau, dt).expect("validated");
    // history[j] is x at t = (j - lag)·dt; slopes hold f at the same points
    let mut x = vec![x0; lag + 1];
    x.reserve(steps);
    let mut slope = vec![0.0; lag + 1];
    slope.reserve(steps);
    for step in 0..steps {
        let j = lag + step;
        let (d0, d1) = (x[j - lag], x[j - lag + 1]);
        let xi = x[j];
        let k1 = params.rhs(xi, d0);
        slope[j] = k1;
        let d_half = if j - lag >= lag {
            0.5 * (d0 + d1) + dt / 8.0 * (slope[j - lag] - slope[j - lag + 1])
        } else {
            0.5 * (d0 + d1)
        };
        let k2 = params.rhs(xi + 0.5 * dt * k1, d_half);
        let k3 = params.rhs(xi + 0.5 * dt * k2, d_half);
        let k4 = params.rhs(xi + dt * k3, d1);
        let next = xi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(RcError::Divergence { step: step + 1 });
        }
        x.push(next);
        slope.push(0.0);
    }
    Ok(x.split_off(lag))
}

/// Unit-period samples after the washout: `len` values starting at
/// `t = washout_time`.
pub fn mackey_glass_series(params: &MackeyGlassParams, len: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let per_unit = whole_steps(1.0, params.dt).expect("validated");
    let washout = whole_steps(params.washout_time, params.dt).expect("validated");
    let steps = washout + len.saturating_sub(1) * per_unit;
    let grid = mackey_glass_integrate(params, params.initial_value(), steps)?;
    Ok(grid[washout..].iter().step_by(per_unit).take(len).copied().collect())
}

/// Prediction task `d(n) = u(n + horizon)`.
pub fn mackey_glass_dataset(params: &MackeyGlassParams, horizon: usize) -> Result<TaskDataset> {
    let series = mackey_glass_series(params, params.n_samples + horizon)?;
    let input = series[..params.n_samples].to_vec();
    let target = series[horizon..].to_vec();
    let split = Split::leading(params.n_samples, params.train, params.validation);
    let meta = TaskMeta::new("mackey_glass", params.seed)
        .with("horizon", horizon)
        .with("dt", params.dt)
        .with("initial", params.initial_value());
    TaskDataset::new(input, target, split, meta)
}
