//! Benchmark datasets: nonlinear channel equalization, NARMA10, memory
//! capacity inputs, Mackey-Glass prediction and external series.

mod channel;
mod mackey_glass;
mod narma;
mod series;

pub use channel::{
    channel_dataset, channel_dataset_from_symbols, channel_filter, channel_receiver, receiver_distortion,
    ChannelParams, CHANNEL_TAPS, SYMBOLS,
};
pub use mackey_glass::{mackey_glass_dataset, mackey_glass_integrate, mackey_glass_series, MackeyGlassParams};
pub use narma::{memory_input, narma10_dataset, narma10_target, NARMA_DIVERGENCE_LIMIT};
pub use series::{parse_series, series_dataset, series_dataset_from_values, ColumnSelector};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{RcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Split {
    pub fn new(train: usize, validation: usize, test: usize) -> Self {
        Split { train, validation, test }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    /// Leading `train` and `validation` segments with the remainder as test.
    /// Series too short for the requested lengths fall back to a 50/25/25
    /// partition.
    pub fn leading(len: usize, train: usize, validation: usize) -> Self {
        if train + validation < len {
            Split::new(train, validation, len - train - validation)
        } else {
            let train = len / 2;
            let validation = len / 4;
            Split::new(train, validation, len - train - validation)
        }
    }

    pub fn train_range(&self) -> Range<usize> {
        0..self.train
    }

    pub fn validation_range(&self) -> Range<usize> {
        self.train..self.train + self.validation
    }

    pub fn test_range(&self) -> Range<usize> {
        self.train + self.validation..self.total()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMeta {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
}

impl TaskMeta {
    pub fn new(name: &str, seed: u64) -> Self {
        TaskMeta {
            name: name.to_string(),
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// Input `u(n)` paired with target `d(n)`. Memory-capacity inputs carry an
/// empty target since the capacity suite derives its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub split: Split,
    pub meta: TaskMeta,
}

impl TaskDataset {
    pub fn new(input: Vec<f64>, target: Vec<f64>, split: Split, meta: TaskMeta) -> Result<Self> {
        let ds = TaskDataset {
            input,
            target,
            split,
            meta,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.target.is_empty() && self.target.len() != self.input.len() {
            return Err(RcError::mismatch("target vs input length", self.input.len(), self.target.len()));
        }
        if self.split.total() != self.input.len() {
            return Err(RcError::mismatch("split total vs series length", self.input.len(), self.split.total()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    pub fn with_split(mut self, train: usize, validation: usize) -> Result<Self> {
        if train + validation > self.input.len() {
            return Err(RcError::TooShort {
                needed: train + validation,
                have: self.input.len(),
            });
        }
        self.split = Split::new(train, validation, self.input.len() - train - validation);
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,u,d\n");
        for (n, u) in self.input.iter().enumerate() {
            match self.target.get(n) {
                Some(d) => writeln!(out, "{},{},{}", n + 1, u, d),
                None => writeln!(out, "{},{},", n + 1, u),
            }
            .expect("writing to a String");
        }
        out
    }

    /// Reads the `n,u,d` layout written by [`Self::to_csv`].
    pub fn from_csv(text: &str, meta: TaskMeta) -> Result<Self> {
        let mut input = Vec::new();
        let mut target = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (input.is_empty() && line.starts_with("n,")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(RcError::Parse {
                    line: lineno + 1,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| RcError::Parse {
                    line: lineno + 1,
                    reason: format!("`{s}`: {e}"),
                })
            };
            input.push(num(fields[1])?);
            if !fields[2].is_empty() {
                target.push(num(fields[2])?);
            }
        }
        let split = Split::leading(input.len(), 0, 0);
        TaskDataset::new(input, target, split, meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_ranges() {
        let s = Split::leading(100, 30, 20);
        assert_eq!(s, Split::new(30, 20, 50));
        assert_eq!(s.validation_range(), 30..50);
        assert_eq!(s.test_range(), 50..100);
        assert_eq!(Split::leading(10, 30, 20), Split::new(5, 2, 3));
    }

    #[test]
    fn csv_round_trip() {
        let ds = TaskDataset::new(vec![0.5, -1.25], vec![1.0, 3.0], Split::new(1, 0, 1), TaskMeta::new("t", 1)).unwrap();
        let text = ds.to_csv();
        assert_eq!(text, "n,u,d\n1,0.5,1\n2,-1.25,3\n");
        let back = TaskDataset::from_csv(&text, TaskMeta::new("t", 1)).unwrap();
        assert_eq!(back.input, ds.input);
        assert_eq!(back.target, ds.target);
        assert!(matches!(
            TaskDataset::from_csv("n,u,d\n1,x,2\n", TaskMeta::new("t", 1)),
            Err(RcError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(TaskDataset::new(vec![1.0; 3], vec![1.0; 2], Split::new(1, 1, 1), TaskMeta::new("t", 0)).is_err());
        assert!(TaskDataset::new(vec![1.0; 3], vec![1.0; 3], Split::new(1, 1, 2), TaskMeta::new("t", 0)).is_err());
    }
}
