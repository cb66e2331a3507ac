//! End-to-end evaluation of one reservoir point on one task: generate the
//! dataset, drive the reservoir, pick the ridge on the validation segment
//! and score the test segment.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{RcError, Result};
use crate::mask::Mask;
use crate::readout::{predict, train_select, CapacityLags, MetricKind, Readout, DEFAULT_RIDGE_GRID};
use crate::reservoir::{run_discrete, ReservoirConfig};
use crate::tasks::{
    channel_dataset, mackey_glass_dataset, memory_input, narma10_dataset, series_dataset, ChannelParams,
    ColumnSelector, MackeyGlassParams, Split, TaskDataset,
};

fn noiseless() -> f64 {
    f64::INFINITY
}
fn n3000() -> usize {
    3000
}
fn n1000() -> usize {
    1000
}
fn n5000() -> usize {
    5000
}
fn channel_test() -> usize {
    100_000
}
fn mg_train() -> usize {
    2000
}
fn mg_validation() -> usize {
    500
}
fn mg_test() -> usize {
    2000
}
fn one() -> usize {
    1
}
fn d_dt() -> f64 {
    0.1
}
fn d_mg_washout() -> f64 {
    1000.0
}

/// Which benchmark to run and how long each segment is. Lengths exclude the
/// reservoir washout, which is generated in front of the training segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Channel {
        #[serde(default = "noiseless")]
        snr_db: f64,
        #[serde(default = "n3000")]
        train: usize,
        #[serde(default = "n3000")]
        validation: usize,
        #[serde(default = "channel_test")]
        test: usize,
    },
    Narma10 {
        #[serde(default = "n3000")]
        train: usize,
        #[serde(default = "n1000")]
        validation: usize,
        #[serde(default = "n5000")]
        test: usize,
    },
    MackeyGlass {
        #[serde(default = "one")]
        horizon: usize,
        #[serde(default = "mg_train")]
        train: usize,
        #[serde(default = "mg_validation")]
        validation: usize,
        #[serde(default = "mg_test")]
        test: usize,
        #[serde(default = "d_dt")]
        dt: f64,
        #[serde(default = "d_mg_washout")]
        washout_time: f64,
    },
    Series {
        path: PathBuf,
        #[serde(default = "default_column")]
        column: ColumnSelector,
        #[serde(default = "one")]
        horizon: usize,
        train: usize,
        validation: usize,
    },
    Memory {
        #[serde(default = "n3000")]
        train: usize,
        #[serde(default = "n1000")]
        validation: usize,
        #[serde(default = "n5000")]
        test: usize,
        #[serde(default)]
        lags: CapacityLags,
    },
}

fn default_column() -> ColumnSelector {
    ColumnSelector::Re
}

impl TaskSpec {
    pub fn channel(snr_db: f64) -> Self {
        TaskSpec::Channel {
            snr_db,
            train: n3000(),
            validation: n3000(),
            test: channel_test(),
        }
    }

    pub fn narma10() -> Self {
        TaskSpec::Narma10 {
            train: n3000(),
            validation: n1000(),
            test: n5000(),
        }
    }

    pub fn mackey_glass(horizon: usize) -> Self {
        TaskSpec::MackeyGlass {
            horizon,
            train: mg_train(),
            validation: mg_validation(),
            test: mg_test(),
            dt: d_dt(),
            washout_time: d_mg_washout(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Channel { .. } => "channel",
            TaskSpec::Narma10 { .. } => "narma10",
            TaskSpec::MackeyGlass { .. } => "mackey_glass",
            TaskSpec::Series { .. } => "series",
            TaskSpec::Memory { .. } => "memory",
        }
    }

    pub fn default_metric(&self) -> MetricKind {
        match self {
            TaskSpec::Channel { .. } => MetricKind::Ser,
            _ => MetricKind::Nmse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TaskSpec::Channel { snr_db, train, validation, test } => {
                ChannelParams::new(*snr_db, 10, 0).validate()?;
                check_segments(*train, *validation, *test)
            }
            TaskSpec::Narma10 { train, validation, test } | TaskSpec::Memory { train, validation, test, .. } => {
                check_segments(*train, *validation, *test)
            }
            TaskSpec::MackeyGlass { train, validation, test, dt, washout_time, .. } => {
                MackeyGlassParams {
                    dt: *dt,
                    washout_time: *washout_time,
                    ..Default::default()
                }
                .validate()?;
                check_segments(*train, *validation, *test)
            }
            TaskSpec::Series { train, validation, .. } => check_segments(*train, *validation, 2),
        }
    }

    /// Generates the dataset with `washout` extra leading samples. For
    /// generated tasks the split is `(washout + train, validation, test)`.
    pub fn generate(&self, washout: usize, seed: u64) -> Result<TaskDataset> {
        self.validate()?;
        match self {
            TaskSpec::Channel { snr_db, train, validation, test } => {
                let len = washout + train + validation + test;
                let mut params = ChannelParams::new(*snr_db, len + 9, seed);
                params.train = washout + train;
                params.validation = *validation;
                channel_dataset(&params)
            }
            TaskSpec::Narma10 { train, validation, test } => {
                narma10_dataset(washout + train + validation + test, seed)?.with_split(washout + train, *validation)
            }
            TaskSpec::Memory { train, validation, test, .. } => {
                memory_input(washout + train + validation + test, seed).with_split(washout + train, *validation)
            }
            TaskSpec::MackeyGlass { horizon, train, validation, test, dt, washout_time } => {
                let params = MackeyGlassParams {
                    dt: *dt,
                    washout_time: *washout_time,
                    n_samples: washout + train + validation + test,
                    seed,
                    train: washout + train,
                    validation: *validation,
                    ..Default::default()
                };
                mackey_glass_dataset(&params, *horizon)
            }
            TaskSpec::Series { path, column, horizon, train, validation } => {
                series_dataset(path, *column, *horizon, Some((washout + train, *validation)))
            }
        }
    }
}

fn check_segments(train: usize, validation: usize, test: usize) -> Result<()> {
    if train < 1 {
        return Err(RcError::invalid("task.train", "must be >= 1"));
    }
    if validation < 2 {
        return Err(RcError::invalid("task.validation", "must be >= 2"));
    }
    if test < 2 {
        return Err(RcError::invalid("task.test", "must be >= 2"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSettings {
    #[serde(default = "default_grid")]
    pub ridge_grid: Vec<f64>,
    #[serde(default = "yes")]
    pub bias: bool,
}

fn default_grid() -> Vec<f64> {
    DEFAULT_RIDGE_GRID.to_vec()
}

fn yes() -> bool {
    true
}

impl Default for ReadoutSettings {
    fn default() -> Self {
        ReadoutSettings {
            ridge_grid: default_grid(),
            bias: true,
        }
    }
}

impl ReadoutSettings {
    pub fn validate(&self) -> Result<()> {
        if self.ridge_grid.is_empty() {
            return Err(RcError::invalid("readout.ridge_grid", "must not be empty"));
        }
        if let Some(bad) = self.ridge_grid.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(RcError::invalid("readout.ridge_grid", format!("values must be finite and >= 0, got {bad}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metric: MetricKind,
    pub test_value: f64,
    pub validation_nmse: f64,
    pub readout: Readout,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Seed used for in-loop reservoir noise, kept distinct from the data seed.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Runs the reservoir over `dataset` and scores `metric` on its test segment.
/// The first `config.washout` samples only drive the reservoir.
pub fn evaluate_dataset(
    dataset: &TaskDataset,
    mask: &Mask,
    config: &ReservoirConfig,
    readout: &ReadoutSettings,
    metric: MetricKind,
    seed: u64,
) -> Result<Evaluation> {
    readout.validate()?;
    let washout = config.washout;
    let split: Split = dataset.split;
    if dataset.target.len() != dataset.input.len() {
        return Err(RcError::invalid("task", "dataset has no targets"));
    }
    if split.train <= washout {
        return Err(RcError::TooShort {
            needed: washout + 1,
            have: split.train,
        });
    }
    let states = run_discrete(config, mask, &dataset.input, noise_seed(seed))?;
    let targets = &dataset.target[washout..];
    let shift = |r: std::ops::Range<usize>| r.start.saturating_sub(washout)..r.end - washout;
    let (tr, va, te) = (shift(split.train_range()), shift(split.validation_range()), shift(split.test_range()));
    let selection = train_select(
        &states.slice(tr.clone()),
        &targets[tr],
        &states.slice(va.clone()),
        &targets[va],
        &readout.ridge_grid,
        readout.bias,
    )?;
    let test_states = states.slice(te.clone());
    let predictions = predict(&selection.readout, &test_states)?;
    let test_targets = targets[te].to_vec();
    let test_value = metric.evaluate(&predictions, &test_targets)?;
    Ok(Evaluation {
        metric,
        test_value,
        validation_nmse: selection.validation_score,
        readout: selection.readout,
        predictions,
        targets: test_targets,
    })
}

pub fn run_task(
    task: &TaskSpec,
    mask: &Mask,
    config: &ReservoirConfig,
    readout: &ReadoutSettings,
    metric: MetricKind,
    seed: u64,
) -> Result<Evaluation> {
    if matches!(task, TaskSpec::Memory { .. }) {
        return Err(RcError::invalid("task.name", "memory is evaluated by the capacity command"));
    }
    let dataset = task.generate(config.washout, seed)?;
    evaluate_dataset(&dataset, mask, config, readout, metric, seed)
}
