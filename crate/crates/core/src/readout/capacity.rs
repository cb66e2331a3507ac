//! Linear, quadratic and cross memory capacities.
//!
//! Every target is recalled by its own readout trained on one shared state
//! matrix; `C = 1 - NMSE` on the test segment, floored at zero before the
//! totals are formed.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nmse, predict, GramSystem, RidgeSolver, DEFAULT_RIDGE_GRID};
use crate::error::{RcError, Result};
use crate::mask::Mask;
use crate::reservoir::{run_discrete, ReservoirConfig, StateMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagRange {
    pub min: usize,
    pub max: usize,
}

impl LagRange {
    pub const fn new(min: usize, max: usize) -> Self {
        LagRange { min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityLags {
    #[serde(default = "default_linear")]
    pub linear: LagRange,
    #[serde(default = "default_quadratic")]
    pub quadratic: LagRange,
    /// Pairs `i < j` with both lags in this range.
    #[serde(default = "default_cross")]
    pub cross: LagRange,
}

fn default_linear() -> LagRange {
    LagRange::new(1, 50)
}

fn default_quadratic() -> LagRange {
    LagRange::new(1, 20)
}

fn default_cross() -> LagRange {
    LagRange::new(1, 15)
}

impl Default for CapacityLags {
    fn default() -> Self {
        CapacityLags {
            linear: default_linear(),
            quadratic: default_quadratic(),
            cross: default_cross(),
        }
    }
}

impl CapacityLags {
    pub fn max_lag(&self) -> usize {
        self.linear.max.max(self.quadratic.max).max(self.cross.max)
    }

    fn targets(&self) -> Vec<(CapacityFamily, usize, Option<usize>)> {
        let mut out = Vec::new();
        for i in self.linear.min..=self.linear.max {
            out.push((CapacityFamily::Linear, i, None));
        }
        for i in self.quadratic.min..=self.quadratic.max {
            out.push((CapacityFamily::Quadratic, i, None));
        }
        for i in self.cross.min..=self.cross.max {
            for j in i + 1..=self.cross.max {
                out.push((CapacityFamily::Cross, i, Some(j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySplit {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for CapacitySplit {
    fn default() -> Self {
        CapacitySplit {
            train: 3000,
            validation: 1000,
            test: 5000,
        }
    }
}

impl CapacitySplit {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityFamily {
    Linear,
    Quadratic,
    Cross,
}

impl CapacityFamily {
    pub fn name(self) -> &'static str {
        match self {
            CapacityFamily::Linear => "linear",
            CapacityFamily::Quadratic => "quadratic",
            CapacityFamily::Cross => "cross",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEntry {
    pub family: CapacityFamily,
    pub i: usize,
    pub j: Option<usize>,
    pub raw: f64,
    pub floored: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CapacityTotals {
    pub linear: f64,
    pub quadratic: f64,
    pub cross: f64,
    pub total: f64,
    pub raw_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub entries: Vec<CapacityEntry>,
    pub totals: CapacityTotals,
    pub n_nodes: usize,
}

impl CapacityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,i,j,raw_c,floored_c\n");
        for e in &self.entries {
            let j = e.j.map(|j| j.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", e.family.name(), e.i, j, e.raw, e.floored);
        }
        out
    }

    pub fn get(&self, family: CapacityFamily, i: usize, j: Option<usize>) -> Option<&CapacityEntry> {
        self.entries.iter().find(|e| e.family == family && e.i == i && e.j == j)
    }
}

fn target_value(family: CapacityFamily, u: &[f64], n: usize, i: usize, j: Option<usize>) -> f64 {
    match family {
        CapacityFamily::Linear => u[n - i],
        // the literal 3u² - 1 form; NMSE ignores the factor 1/2 of P₂
        CapacityFamily::Quadratic => 3.0 * u[n - i] * u[n - i] - 1.0,
        CapacityFamily::Cross => u[n - i] * u[n - j.expect("cross target has two lags")],
    }
}

/// Capacities from a prepared state matrix. `input[offset + s]` must be the
/// input that drove state step `s`, with at least `max_lag` inputs of history
/// before the first step used.
pub fn capacity_from_states(
    states: &StateMatrix,
    input: &[f64],
    offset: usize,
    lags: &CapacityLags,
    split: &CapacitySplit,
    ridge_grid: &[f64],
) -> Result<CapacityReport> {
    let max_lag = lags.max_lag();
    let first = max_lag.saturating_sub(offset);
    let needed = first + split.total();
    if states.input_len() < needed {
        return Err(RcError::TooShort {
            needed,
            have: states.input_len(),
        });
    }
    if input.len() < offset + needed {
        return Err(RcError::mismatch("capacity input length", offset + needed, input.len()));
    }
    if split.train == 0 || split.validation < 2 || split.test < 2 {
        return Err(RcError::invalid("capacity.split", "train must be >= 1, validation and test >= 2"));
    }
    let grid: &[f64] = if ridge_grid.is_empty() { &DEFAULT_RIDGE_GRID } else { ridge_grid };

    let train = states.slice(first..first + split.train);
    let val = states.slice(first + split.train..first + split.train + split.validation);
    let test = states.slice(first + split.train + split.validation..needed);
    let system = GramSystem::new(&train, true);
    let solvers: Vec<RidgeSolver<'_>> = grid.iter().filter_map(|&r| system.factor(r).ok()).collect();
    if solvers.is_empty() {
        return Err(RcError::Singular);
    }

    let series = |range: std::ops::Range<usize>, family, i, j| -> Vec<f64> {
        range.map(|s| target_value(family, input, offset + s, i, j)).collect()
    };

    let entries: Vec<CapacityEntry> = lags
        .targets()
        .into_par_iter()
        .map(|(family, i, j)| -> Result<CapacityEntry> {
            let d_train = series(first..first + split.train, family, i, j);
            let d_val = series(first + split.train..first + split.train + split.validation, family, i, j);
            let d_test = series(first + split.train + split.validation..needed, family, i, j);
            let (rhs, mean) = system.rhs(&train, &d_train)?;
            let mut best = None;
            let mut best_score = f64::INFINITY;
            for solver in &solvers {
                let readout = solver.solve(&rhs, mean);
                let score = nmse(&predict(&readout, &val)?, &d_val)?;
                if score < best_score {
                    best_score = score;
                    best = Some(readout);
                }
            }
            let readout = best.unwrap_or_else(|| solvers[0].solve(&rhs, mean));
            let raw = 1.0 - nmse(&predict(&readout, &test)?, &d_test)?;
            Ok(CapacityEntry {
                family,
                i,
                j,
                raw,
                floored: raw.max(0.0),
            })
        })
        .collect::<Result<_>>()?;

    let mut totals = CapacityTotals::default();
    for e in &entries {
        match e.family {
            CapacityFamily::Linear => totals.linear += e.floored,
            CapacityFamily::Quadratic => totals.quadratic += e.floored,
            CapacityFamily::Cross => totals.cross += e.floored,
        }
        totals.raw_total += e.raw;
    }
    totals.total = totals.linear + totals.quadratic + totals.cross;
    Ok(CapacityReport {
        entries,
        totals,
        n_nodes: states.n_nodes(),
    })
}

/// Drives the reservoir with `input` (uniform on [-1, 1]) and measures all
/// configured capacities.
pub fn capacity_suite(
    config: &ReservoirConfig,
    mask: &Mask,
    input: &[f64],
    lags: &CapacityLags,
    split: &CapacitySplit,
    ridge_grid: &[f64],
    seed: u64,
) -> Result<CapacityReport> {
    let states = run_discrete(config, mask, input, seed)?;
    capacity_from_states(&states, input, config.washout, lags, split, ridge_grid)
}
