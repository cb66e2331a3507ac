//! Loader for external real-valued series (e.g. the real or imaginary part
//! of a radar return), turned into a `p`-step-ahead prediction task.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Split, TaskDataset, TaskMeta};
use crate::error::{RcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSelector {
    Re,
    Im,
}

impl ColumnSelector {
    fn index(self) -> usize {
        match self {
            ColumnSelector::Re => 0,
            ColumnSelector::Im => 1,
        }
    }
}

impl std::str::FromStr for ColumnSelector {
    type Err = RcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "re" | "0" => Ok(ColumnSelector::Re),
            "im" | "1" => Ok(ColumnSelector::Im),
            other => Err(RcError::invalid("column", format!("expected re, im, 0 or 1, got `{other}`"))),
        }
    }
}

/// Parses a CSV of one or two numeric columns. A first line that does not
/// parse as numbers is taken as a header.
pub fn parse_series(text: &str, column: ColumnSelector) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if lineno == 0 => continue,
            Err(e) => {
                return Err(RcError::Parse {
                    line: lineno + 1,
                    reason: e.to_string(),
                })
            }
        };
        if row.is_empty() || row.len() > 2 {
            return Err(RcError::Parse {
                line: lineno + 1,
                reason: format!("expected 1 or 2 columns, found {}", row.len()),
            });
        }
        let value = row.get(column.index()).ok_or_else(|| RcError::Parse {
            line: lineno + 1,
            reason: "imaginary column requested but the row has a single column".into(),
        })?;
        if !value.is_finite() {
            return Err(RcError::Parse {
                line: lineno + 1,
                reason: "non-finite value".into(),
            });
        }
        values.push(*value);
    }
    Ok(values)
}

/// Standardizes `values` to zero mean and unit variance and pairs each
/// sample with the one `horizon` steps ahead.
pub fn series_dataset_from_values(values: &[f64], horizon: usize, split: Option<(usize, usize)>) -> Result<TaskDataset> {
    if values.len() < horizon + 1 || values.len() < 2 {
        return Err(RcError::TooShort {
            needed: (horizon + 1).max(2),
            have: values.len(),
        });
    }
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
    if !(var > 0.0) {
        return Err(RcError::ZeroVariance);
    }
    let sd = var.sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    let usable = z.len() - horizon;
    let input = z[..usable].to_vec();
    let target = z[horizon..].to_vec();
    let split = match split {
        Some((train, validation)) if train + validation <= usable => {
            Split::new(train, validation, usable - train - validation)
        }
        Some((train, validation)) => {
            return Err(RcError::TooShort {
                needed: train + validation,
                have: usable,
            })
        }
        None => Split::leading(usable, usable / 2, usable / 4),
    };
    let meta = TaskMeta::new("series", 0).with("horizon", horizon);
    TaskDataset::new(input, target, split, meta)
}

pub fn series_dataset(
    path: &Path,
    column: ColumnSelector,
    horizon: usize,
    split: Option<(usize, usize)>,
) -> Result<TaskDataset> {
    let text = std::fs::read_to_string(path)?;
    let values = parse_series(&text, column)?;
    let mut ds = series_dataset_from_values(&values, horizon, split)?;
    ds.meta = ds
        .meta
        .with("path", path.display())
        .with("column", format!("{column:?}").to_lowercase());
    Ok(ds)
}
