//! Linear readout `y(n) = b + Σ_i W_i x_i(n)` trained by ridge regression,
//! plus the task metrics (NMSE, symbol error rate) and memory capacities.

mod capacity;

pub use capacity::{
    capacity_from_states, capacity_suite, CapacityEntry, CapacityFamily, CapacityLags, CapacityReport,
    CapacitySplit, CapacityTotals, LagRange,
};

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{RcError, Result};
use crate::reservoir::StateMatrix;

/// Ridge values tried on the validation split when none are configured.
pub const DEFAULT_RIDGE_GRID: [f64; 6] = [0.0, 1e-9, 1e-7, 1e-5, 1e-3, 1e-1];

/// Relative pivot size below which an unregularized Gram matrix is treated
/// as rank-deficient.
const SINGULAR_PIVOT: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub ridge: f64,
}

impl Readout {
    pub fn zeros(n_nodes: usize) -> Self {
        Readout {
            weights: vec![0.0; n_nodes],
            bias: 0.0,
            ridge: 0.0,
        }
    }

    #[inline]
    pub fn output(&self, state: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(state).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,w\n");
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, w);
        }
        let _ = writeln!(out, "bias,{}", self.bias);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Nmse,
    Ser,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Nmse => "nmse",
            MetricKind::Ser => "ser",
        }
    }

    pub fn evaluate(self, y: &[f64], d: &[f64]) -> Result<f64> {
        match self {
            MetricKind::Nmse => nmse(y, d),
            MetricKind::Ser => ser(y, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    pub value: f64,
}

/// Sufficient statistics of a least-squares problem over one state matrix.
///
/// With a bias the Gram matrix is built from mean-centred states, which is
/// the same minimizer as an appended constant node with an unpenalized
/// weight.
#[derive(Debug, Clone)]
pub struct GramSystem {
    gram: DMatrix<f64>,
    means: Vec<f64>,
    use_bias: bool,
    rows: usize,
}

/// A factorized `G + λI`, reusable across many targets.
pub struct RidgeSolver<'a> {
    system: &'a GramSystem,
    ridge: f64,
    factor: Cholesky<f64, Dyn>,
}

impl GramSystem {
    pub fn new(states: &StateMatrix, use_bias: bool) -> Self {
        let n = states.n_nodes();
        let rows = states.input_len();
        let mut means = vec![0.0; n];
        if use_bias && rows > 0 {
            for row in states.steps() {
                for (m, x) in means.iter_mut().zip(row) {
                    *m += x;
                }
            }
            means.iter_mut().for_each(|m| *m /= rows as f64);
        }
        // column-major lower triangle
        let mut lower = vec![0.0; n * n];
        let mut centred = vec![0.0; n];
        for row in states.steps() {
            for (c, (x, m)) in centred.iter_mut().zip(row.iter().zip(&means)) {
                *c = x - m;
            }
            for a in 0..n {
                let ca = centred[a];
                if ca == 0.0 {
                    continue;
                }
                let col = &mut lower[a * n..(a + 1) * n];
                for b in a..n {
                    col[b] += ca * centred[b];
                }
            }
        }
        let mut gram = DMatrix::from_vec(n, n, lower);
        gram.fill_upper_triangle_with_lower_triangle();
        GramSystem {
            gram,
            means,
            use_bias,
            rows,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.means.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Right-hand side `X_cᵀ d_c` and the target mean.
    pub fn rhs(&self, states: &StateMatrix, targets: &[f64]) -> Result<(DVector<f64>, f64)> {
        if targets.len() != states.input_len() {
            return Err(RcError::mismatch("target length vs states", states.input_len(), targets.len()));
        }
        let n = self.n_nodes();
        let mean_d = if self.use_bias && !targets.is_empty() {
            targets.iter().sum::<f64>() / targets.len() as f64
        } else {
            0.0
        };
        let mut rhs = DVector::<f64>::zeros(n);
        for (row, &d) in states.steps().zip(targets) {
            let dc = d - mean_d;
            for (a, (x, m)) in row.iter().zip(&self.means).enumerate() {
                rhs[a] += (x - m) * dc;
            }
        }
        Ok((rhs, mean_d))
    }

    pub fn factor(&self, ridge: f64) -> Result<RidgeSolver<'_>> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(RcError::invalid("readout.ridge", format!("must be finite and >= 0, got {ridge}")));
        }
        let n = self.n_nodes();
        let mut a = self.gram.clone();
        for i in 0..n {
            a[(i, i)] += ridge;
        }
        let scale = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(RcError::Singular);
        }
        let factor = Cholesky::new(a).ok_or(RcError::Singular)?;
        if ridge == 0.0 {
            let l = factor.l_dirty();
            let min_pivot = (0..n).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot < SINGULAR_PIVOT * scale {
                return Err(RcError::Singular);
            }
        }
        Ok(RidgeSolver {
            system: self,
            ridge,
            factor,
        })
    }
}

impl RidgeSolver<'_> {
    pub fn solve(&self, rhs: &DVector<f64>, target_mean: f64) -> Readout {
        let w = self.factor.solve(rhs);
        let weights: Vec<f64> = w.iter().copied().collect();
        let bias = if self.system.use_bias {
            target_mean - weights.iter().zip(&self.system.means).map(|(w, m)| w * m).sum::<f64>()
        } else {
            0.0
        };
        Readout {
            weights,
            bias,
            ridge: self.ridge,
        }
    }
}

/// Minimizes `Σ (d(n) - y(n))² + λ‖W‖²` with an unpenalized bias.
pub fn train(states: &StateMatrix, targets: &[f64], ridge: f64) -> Result<Readout> {
    train_with_bias(states, targets, ridge, true)
}

pub fn train_with_bias(states: &StateMatrix, targets: &[f64], ridge: f64, use_bias: bool) -> Result<Readout> {
    let system = GramSystem::new(states, use_bias);
    let (rhs, mean) = system.rhs(states, targets)?;
    if targets.is_empty() {
        return Err(RcError::TooShort { needed: 1, have: 0 });
    }
    Ok(system.factor(ridge)?.solve(&rhs, mean))
}

pub fn predict(readout: &Readout, states: &StateMatrix) -> Result<Vec<f64>> {
    if readout.weights.len() != states.n_nodes() {
        return Err(RcError::mismatch("readout weights vs n_nodes", states.n_nodes(), readout.weights.len()));
    }
    Ok(states.steps().map(|row| readout.output(row)).collect())
}

/// Result of choosing λ on a validation split.
#[derive(Debug, Clone)]
pub struct RidgeSelection {
    pub readout: Readout,
    pub validation_score: f64,
}

/// Trains one readout per ridge value and keeps the one with the lowest
/// validation NMSE. Values whose system is singular are skipped; ties keep
/// the earlier grid entry.
pub fn train_select(
    train_states: &StateMatrix,
    train_targets: &[f64],
    val_states: &StateMatrix,
    val_targets: &[f64],
    ridge_grid: &[f64],
    use_bias: bool,
) -> Result<RidgeSelection> {
    let system = GramSystem::new(train_states, use_bias);
    let (rhs, mean) = system.rhs(train_states, train_targets)?;
    let mut best: Option<RidgeSelection> = None;
    let mut last_err = None;
    for &ridge in ridge_grid {
        let solver = match system.factor(ridge) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let readout = solver.solve(&rhs, mean);
        let y = predict(&readout, val_states)?;
        let score = squared_error(&y, val_targets)?;
        if best.as_ref().is_none_or(|b| score < b.validation_score) {
            best = Some(RidgeSelection {
                readout,
                validation_score: score,
            });
        }
    }
    match best {
        Some(mut b) => {
            b.validation_score = nmse(&predict(&b.readout, val_states)?, val_targets).unwrap_or(f64::INFINITY);
            Ok(b)
        }
        None => Err(last_err.unwrap_or_else(|| RcError::invalid("readout.ridge_grid", "must not be empty"))),
    }
}

fn squared_error(y: &[f64], d: &[f64]) -> Result<f64> {
    if y.len() != d.len() {
        return Err(RcError::mismatch("prediction vs target length", d.len(), y.len()));
    }
    Ok(y.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Mean squared error over the population variance of `d`.
pub fn nmse(y: &[f64], d: &[f64]) -> Result<f64> {
    if y.len() != d.len() {
        return Err(RcError::mismatch("prediction vs target length", d.len(), y.len()));
    }
    if d.len() < 2 {
        return Err(RcError::TooShort { needed: 2, have: d.len() });
    }
    let len = d.len() as f64;
    let mean = d.iter().sum::<f64>() / len;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
    if !(var > 0.0) {
        return Err(RcError::ZeroVariance);
    }
    Ok(squared_error(y, d)? / len / var)
}

/// Nearest symbol of `{-3, -1, 1, 3}`; values on a threshold go up.
#[inline]
pub fn quantize_symbol(y: f64) -> f64 {
    if y < -2.0 {
        -3.0
    } else if y < 0.0 {
        -1.0
    } else if y < 2.0 {
        1.0
    } else {
        3.0
    }
}

/// Fraction of outputs whose nearest symbol differs from the target.
pub fn ser(y: &[f64], d: &[f64]) -> Result<f64> {
    if y.len() != d.len() {
        return Err(RcError::mismatch("prediction vs target length", d.len(), y.len()));
    }
    if d.is_empty() {
        return Ok(0.0);
    }
    let errors = y.iter().zip(d).filter(|(y, d)| quantize_symbol(**y) != **d).count();
    Ok(errors as f64 / d.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::ReservoirConfig;

    fn matrix(n: usize, rows: Vec<f64>) -> StateMatrix {
        StateMatrix::from_rows(n, rows, ReservoirConfig::new(n.max(2), 1, 0.5, 1.0)).unwrap()
    }

    #[test]
    fn nmse_examples() {
        let d = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(nmse(&d, &d).unwrap(), 0.0);
        assert!((nmse(&[1.5; 4], &d).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmse(&[0.0, 1.0, 2.0, 4.0], &d).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(nmse(&[1.0, 1.0], &[2.0, 2.0]), Err(RcError::ZeroVariance)));
        assert!(nmse(&[1.0], &[2.0]).is_err());
        assert!(nmse(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn ser_examples() {
        let d = [3.0, -1.0, 1.0];
        assert_eq!(ser(&d, &d).unwrap(), 0.0);
        assert_eq!(ser(&[2.7, -0.4, 0.1], &d).unwrap(), 0.0);
        assert!((ser(&[2.7, -0.4, 0.1], &[1.0, -1.0, 1.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_round_up() {
        assert_eq!(quantize_symbol(-2.0), -1.0);
        assert_eq!(quantize_symbol(0.0), 1.0);
        assert_eq!(quantize_symbol(2.0), 3.0);
        assert_eq!(quantize_symbol(-7.0), -3.0);
    }

    #[test]
    fn constant_target_gives_pure_bias() {
        let rows: Vec<f64> = (0..60).map(|v| ((v * 7 % 13) as f64 / 13.0) - 0.4).collect();
        let s = matrix(3, rows);
        let r = train(&s, &[2.5; 20], 0.0).unwrap();
        assert!(r.weights.iter().all(|w| w.abs() < 1e-10));
        assert!((r.bias - 2.5).abs() < 1e-12);
    }

    #[test]
    fn exact_node_is_recovered() {
        let rows: Vec<f64> = (0..120u64).map(|v| ((v * v * 7919 + 13 * v) % 1009) as f64 / 1009.0 - 0.5).collect();
        let s = matrix(4, rows);
        let target: Vec<f64> = s.steps().map(|r| r[2]).collect();
        let r = train(&s, &target, 0.0).unwrap();
        for (i, w) in r.weights.iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((w - want).abs() < 1e-9);
        }
        assert!(r.bias.abs() < 1e-9);
        let y = predict(&r, &s).unwrap();
        assert!(y.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn zero_states_are_singular_without_ridge() {
        let s = matrix(3, vec![0.0; 30]);
        let d: Vec<f64> = (0..10).map(|v| v as f64).collect();
        assert!(matches!(train_with_bias(&s, &d, 0.0, false), Err(RcError::Singular)));
        assert!(matches!(train(&s, &d, 0.0), Err(RcError::Singular)));
        let r = train(&s, &d, 1e-3).unwrap();
        assert_eq!(r.weights, vec![0.0; 3]);
        assert!((r.bias - 4.5).abs() < 1e-12);
        // duplicated node: rank-deficient
        let rows: Vec<f64> = (0..20).flat_map(|v| {
            let x = (v as f64 * 0.3).cos();
            [x, x]
        }).collect();
        assert!(matches!(train(&matrix(2, rows.clone()), &d[..].repeat(2), 0.0), Err(RcError::Singular)));
        assert!(train(&matrix(2, rows), &d[..].repeat(2), 1e-3).is_ok());
    }

    #[test]
    fn predict_checks_dimensions() {
        let s = matrix(3, vec![0.1; 9]);
        assert!(predict(&Readout::zeros(2), &s).is_err());
        assert_eq!(predict(&Readout::zeros(3), &s).unwrap(), vec![0.0; 3]);
        let mut e1 = Readout::zeros(3);
        e1.weights[0] = 1.0;
        assert_eq!(predict(&e1, &s).unwrap(), vec![0.1; 3]);
    }

    #[test]
    fn selection_prefers_lower_validation_error() {
        let rows: Vec<f64> = (0..400).map(|v| ((v as f64) * 1.37).sin()).collect();
        let s = matrix(4, rows);
        let target: Vec<f64> = s.steps().map(|r| 0.5 * r[0] - r[3] + 0.2).collect();
        let (tr, va) = (s.slice(0..60), s.slice(60..100));
        let sel = train_select(&tr, &target[..60], &va, &target[60..], &DEFAULT_RIDGE_GRID, true).unwrap();
        assert!(sel.validation_score < 1e-12);
        assert!(sel.readout.ridge <= 1e-7);
    }

    #[test]
    fn weights_csv() {
        let r = Readout { weights: vec![0.5, -2.0], bias: 0.25, ridge: 0.0 };
        assert_eq!(r.to_csv(), "i,w\n1,0.5\n2,-2\nbias,0.25\n");
    }
}
