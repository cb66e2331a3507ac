//! Run configuration files (TOML, or JSON by extension) and their hash.
//!
//! ```toml
//! seed = 1
//!
//! [task]
//! name = "channel"
//! snr_db = 28
//!
//! [mask]
//! family = "two_sine"
//! n_nodes = 53
//! f1 = 3
//! f2 = 5
//!
//! [reservoir]
//! n_nodes = 53
//! offset_k = 18
//! alpha = 0.5
//! beta = 0.05
//! nonlinearity = { kind = "sine", phase = 0.4 }
//!
//! [readout]
//! ridge_grid = [0.0, 1e-9, 1e-7, 1e-5, 1e-3, 1e-1]
//! bias = true
//!
//! [sweep]
//! k_values = [17, 18, 19]
//! alpha_values = [0.3, 0.5]
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{RcError, Result};
use crate::mask::{MaskFamily, MaskSpec};
use crate::pipeline::{ReadoutSettings, TaskSpec};
use crate::readout::MetricKind;
use crate::reservoir::ReservoirConfig;
use crate::sweep::{default_alpha_values, default_beta_values, SweepGrid};

/// Optional sweep section. Axes left out fall back to the single value of
/// the run point (k, f1, f2, phase) or to the default gain grids (alpha,
/// beta).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k_values: Option<Vec<usize>>,
    pub f1_values: Option<Vec<usize>>,
    pub f2_values: Option<Vec<usize>>,
    pub alpha_values: Option<Vec<f64>>,
    pub beta_values: Option<Vec<f64>>,
    pub phase_values: Option<Vec<f64>>,
    pub replicas: Option<usize>,
    pub metric: Option<MetricKind>,
    /// SNR list for the SER curve (channel task only).
    pub snr_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub predictions: bool,
    #[serde(default = "yes")]
    pub weights: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            predictions: true,
            weights: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub task: TaskSpec,
    pub mask: MaskSpec,
    pub reservoir: ReservoirConfig,
    #[serde(default)]
    pub readout: ReadoutSettings,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, ConfigFormat::from_path(path))
    }

    /// Parses and validates. Every error is reported against a line of
    /// `text`.
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        let config: RunConfig = match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| RcError::Parse {
                line: e.span().map_or(1, |s| line_of_offset(text, s.start)),
                reason: e.message().to_string(),
            })?,
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| RcError::Parse {
                line: e.line().max(1),
                reason: e.to_string(),
            })?,
        };
        config.validate().map_err(|e| match e {
            RcError::InvalidSpec { field, reason } => RcError::Parse {
                line: locate_field(text, &field, format),
                reason: format!("invalid {field}: {reason}"),
            },
            other => other,
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.mask.validate()?;
        self.reservoir.validate()?;
        self.readout.validate()?;
        if self.mask.n_nodes != self.reservoir.n_nodes {
            return Err(RcError::invalid(
                "reservoir.n_nodes",
                format!(
                    "must equal mask.n_nodes ({} vs {})",
                    self.reservoir.n_nodes, self.mask.n_nodes
                ),
            ));
        }
        if self.sweep.is_some() {
            self.sweep_grid()?.validate()?;
        }
        Ok(())
    }

    /// Sweep grid described by the `[sweep]` section (or a one-point grid
    /// at the run point when the section is absent).
    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        let s = self.sweep.clone().unwrap_or_default();
        let mut grid = SweepGrid::new(self.mask.family, self.mask.n_nodes, self.task.clone());
        grid.k_values = s.k_values.unwrap_or_else(|| vec![self.reservoir.offset_k]);
        grid.f1_values = s.f1_values.unwrap_or_else(|| vec![self.mask.f1]);
        grid.f2_values = s.f2_values.unwrap_or_else(|| vec![self.mask.f2]);
        grid.alpha_values = s.alpha_values.unwrap_or_else(default_alpha_values);
        grid.beta_values = s.beta_values.unwrap_or_else(default_beta_values);
        grid.phase_values = s.phase_values.unwrap_or_else(|| vec![self.reservoir.nonlinearity.phase]);
        if let Some(r) = s.replicas {
            grid.replicas = r;
        }
        grid.metric = s.metric;
        grid.seed_base = self.seed;
        grid.mask_seed = if self.mask.family.is_harmonic() { 0 } else { self.mask.seed };
        grid.readout = self.readout.clone();
        grid.nonlinearity = self.reservoir.nonlinearity;
        grid.state_noise_std = self.reservoir.state_noise_std;
        grid.washout = self.reservoir.washout;
        if grid.family != MaskFamily::TwoSine {
            grid.f2_values.clear();
        }
        Ok(grid)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// SHA-256 of the canonical JSON form of `value`, as lowercase hex.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_value(value).expect("configuration serializes to JSON");
    // serde_json's default map is ordered, so the text is canonical
    let digest = Sha256::digest(json.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort line of `field` (e.g. `mask.f2`) in the source: the key
/// inside its section, else the section header, else line 1.
fn locate_field(text: &str, field: &str, format: ConfigFormat) -> usize {
    let mut parts = field.split('.');
    let section = parts.next().unwrap_or("");
    let key = parts.next();
    let lines: Vec<&str> = text.lines().collect();
    match format {
        ConfigFormat::Toml => {
            let header = lines.iter().position(|l| {
                let t = l.trim();
                t == format!("[{section}]") || t.starts_with(&format!("[{section}."))
            });
            let Some(h) = header else {
                return 1;
            };
            if let Some(key) = key {
                for (i, l) in lines.iter().enumerate().skip(h + 1) {
                    let t = l.trim_start();
                    if t.starts_with('[') && !t.starts_with(&format!("[{section}.")) {
                        break;
                    }
                    if t.split('=').next().map(str::trim) == Some(key) || t.contains(&format!("{key} =")) {
                        return i + 1;
                    }
                }
            }
            h + 1
        }
        ConfigFormat::Json => {
            let quoted = |s: &str| format!("\"{s}\"");
            let start = lines.iter().position(|l| l.contains(&quoted(section)));
            let Some(s) = start else {
                return 1;
            };
            if let Some(key) = key {
                if let Some(i) = lines.iter().skip(s).position(|l| l.contains(&quoted(key))) {
                    return s + i + 1;
                }
            }
            s + 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 4

[task]
name = "narma10"
train = 500
validation = 200
test = 300

[mask]
family = "two_sine"
n_nodes = 53
f1 = 3
f2 = 5

[reservoir]
n_nodes = 53
offset_k = 18
alpha = 0.8
beta = 0.2
"#;

    #[test]
    fn parses_toml() {
        let c = RunConfig::parse(BASE, ConfigFormat::Toml).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.mask, MaskSpec::two_sine(53, 3, 5));
        assert_eq!(c.readout, ReadoutSettings::default());
        assert!(c.sweep.is_none());
    }

    #[test]
    fn json_round_trip_has_same_hash() {
        let c = RunConfig::parse(BASE, ConfigFormat::Toml).unwrap();
        let json = serde_json::to_string_pretty(&c).unwrap();
        let d = RunConfig::parse(&json, ConfigFormat::Json).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.hash(), d.hash());
        assert_eq!(c.hash().len(), 64);
        assert_ne!(c.hash(), c.clone().with_seed(5).hash());
    }

    #[test]
    fn equal_frequencies_point_at_their_line() {
        let text = BASE.replace("f2 = 5", "f2 = 3");
        let err = RunConfig::parse(&text, ConfigFormat::Toml).unwrap_err();
        let line = text.lines().position(|l| l.starts_with("f2")).unwrap() + 1;
        match err {
            RcError::Parse { line: l, reason } => {
                assert_eq!(l, line);
                assert!(reason.contains("f1 != f2"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn node_count_mismatch() {
        let text = BASE.replacen("n_nodes = 53\noffset_k", "n_nodes = 41\noffset_k", 1);
        let err = RunConfig::parse(&text, ConfigFormat::Toml).unwrap_err();
        assert!(err.to_string().contains("mask.n_nodes"), "{err}");
        assert!(err.is_config_error());
    }

    #[test]
    fn syntax_and_unknown_keys() {
        let err = RunConfig::parse("seed = 1\n[task]\nname = \"narma10\"\nbogus = 3\n", ConfigFormat::Toml).unwrap_err();
        assert!(matches!(err, RcError::Parse { line: 2..=4, .. }), "{err:?}");
        let err = RunConfig::parse("{\n  \"seed\": \n}", ConfigFormat::Json).unwrap_err();
        assert!(matches!(err, RcError::Parse { .. }));
    }

    #[test]
    fn sweep_defaults_to_run_point() {
        let text = format!("{BASE}\n[sweep]\nalpha_values = [0.7, 0.9]\n");
        let c = RunConfig::parse(&text, ConfigFormat::Toml).unwrap();
        let g = c.sweep_grid().unwrap();
        assert_eq!(g.k_values, vec![18]);
        assert_eq!((g.f1_values.clone(), g.f2_values.clone()), (vec![3], vec![5]));
        assert_eq!(g.beta_values.len(), 7);
        assert_eq!(g.points().len(), 14);
        assert_eq!(g.seed_base, 4);
    }
}
